//! Diósi-Penrose collapse times for spatial superpositions of finite crystals.
//!
//! The decoherence energy of a rigid lattice displaced by `d` is a double sum
//! over all atom pairs of a smeared Newtonian kernel. Because the kernel only
//! depends on the pair separation, the double sum collapses to a single sum
//! over the lattice's distance domain with integer multiplicities, which makes
//! plates of 10¹⁰ atoms tractable on one machine.
//!
//! Modules:
//! - [`lattice`]: crystal geometry and the weighted distance domain.
//! - [`kernel`]: the pair kernel, the linear-scaling sum and the O(N²) oracle.
//! - [`analytics`]: closed-form bound brackets, far-field and plateau laws.
//! - [`dynamics`]: white and colored-noise collapse times, coherence elements.
//!
//! All quantities are SI.

// `!(x > 0.0)` is the NaN-rejecting form; reference constants keep their full digits.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod analytics;
pub mod consts;
pub mod dynamics;
pub mod error;
pub mod fit;
pub mod kernel;
pub mod lattice;
pub mod special;
pub mod sum;
pub mod vec3;

pub use analytics::{BoundBracket, Interval, SquareCrystal};
pub use dynamics::{CoherenceConfig, CoherenceElements, ColoredNoiseModel};
pub use error::{Error, Result};
pub use kernel::{CollapseResult, FastOptions, SuperpositionConfig};
pub use lattice::{BasisAtom, DistanceEntry, Lattice};
pub use vec3::Vec3;
