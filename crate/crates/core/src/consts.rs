//! Physical constants (CODATA 2018) and length units.

/// Newtonian constant of gravitation, m³ kg⁻¹ s⁻².
pub const G: f64 = 6.674_30e-11;

/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Unified atomic mass unit, kg.
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;

/// Mass of a ¹²C atom, kg.
pub const CARBON_MASS: f64 = 12.0 * ATOMIC_MASS_UNIT;

pub const ANGSTROM: f64 = 1e-10;
pub const NANOMETER: f64 = 1e-9;
pub const MICROMETER: f64 = 1e-6;

/// Graphene lattice step, m.
pub const GRAPHENE_LATTICE_STEP: f64 = 2.46 * ANGSTROM;

/// Graphite interlayer spacing, m. Default for stacked graphene.
pub const GRAPHITE_INTERLAYER: f64 = 3.35 * ANGSTROM;

/// Perception time of the human eye, s.
pub const TAU_OBS: f64 = 0.01;
