//! Closed-form estimates of ΔE for monoatomic square crystals.
//!
//! With S₁ the same-branch sum and S₂ the cross-branch sum, ΔE = 8πGm²(S₁−S₂).
//! For a square crystal of N atoms, step a and side L, displaced by d > L,
//! each regime of R_eff relative to a, L, (d−L)/2, (d+2L)/2 and d has its own
//! bracket on S₁−S₂; beyond (d+2L)/2 the leading terms cancel and the
//! second-order remainder N²d²/(12√π R³) is used as a point estimate.

use crate::consts::{G, HBAR};
use crate::error::{invalid, Error, Result};
use crate::lattice::Lattice;
use crate::special::{erf, gamma_half};
use std::f64::consts::PI;
use std::fmt;

/// R_eff regime, ordered by increasing R_eff.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Interval {
    /// R_eff ≤ a
    BelowA,
    /// a < R_eff ≤ L
    AToL,
    /// L < R_eff ≤ (d−L)/2
    LToHalfDmL,
    /// (d−L)/2 < R_eff ≤ (d+2L)/2
    MidD,
    /// (d+2L)/2 < R_eff ≤ d
    HalfDp2LToD,
    /// d < R_eff
    AboveD,
}

impl Interval {
    pub const ALL: [Interval; 6] = [
        Interval::BelowA,
        Interval::AToL,
        Interval::LToHalfDmL,
        Interval::MidD,
        Interval::HalfDp2LToD,
        Interval::AboveD,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Interval::BelowA => "below_a",
            Interval::AToL => "a_to_L",
            Interval::LToHalfDmL => "L_to_half_d_minus_L",
            Interval::MidD => "mid_d",
            Interval::HalfDp2LToD => "half_d_plus_2L_to_d",
            Interval::AboveD => "above_d",
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The few numbers the square-crystal estimates need.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquareCrystal {
    pub n_atoms: f64,
    /// Lattice step, m.
    pub a: f64,
    /// Atomic mass, kg.
    pub mass: f64,
    /// Side length L, m.
    pub side: f64,
}

impl SquareCrystal {
    pub fn new(n_atoms: f64, a: f64, mass: f64, side: f64) -> Result<Self> {
        for (name, v) in [("n_atoms", n_atoms), ("a", a), ("mass", mass), ("side", side)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("must be > 0, got {v}")));
            }
        }
        Ok(SquareCrystal {
            n_atoms,
            a,
            mass,
            side,
        })
    }

    /// Extracts the summary from a lattice, which must be a 2D monoatomic
    /// square lattice. L is the longer side.
    pub fn from_lattice(lat: &Lattice) -> Result<Self> {
        if lat.dimension() != 2 {
            return Err(Error::UnsupportedLattice(
                "bounds are derived for two-dimensional crystals only".into(),
            ));
        }
        if lat.basis().len() != 1 {
            return Err(Error::UnsupportedLattice(format!(
                "bounds are derived for a monoatomic lattice, this one has {} atoms per cell",
                lat.basis().len()
            )));
        }
        let v = lat.vectors();
        let (l1, l2) = (v[0].norm(), v[1].norm());
        let orthogonal = v[0].dot(v[1]).abs() <= 1e-12 * l1 * l2;
        if !orthogonal || (l1 - l2).abs() > 1e-12 * l1 {
            return Err(Error::UnsupportedLattice(
                "bounds are derived for a square lattice (orthogonal, equal primitive vectors)".into(),
            ));
        }
        let side = lat.side_lengths().into_iter().fold(0.0, f64::max);
        SquareCrystal::new(lat.n_atoms() as f64, l1, lat.basis()[0].mass, side)
    }

    fn prefactor(&self) -> f64 {
        8.0 * PI * G * self.mass * self.mass
    }
}

/// Analytic bracket on ΔE at one R_eff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundBracket {
    pub r_eff: f64,
    /// J.
    pub lower: f64,
    /// J.
    pub upper: f64,
    pub interval: Interval,
}

impl BoundBracket {
    /// True when the closed-form upper bound fell below the lower one. This
    /// happens in the a–L regime, where the upper bound carries a negative
    /// R_eff-linear term; it is reported, not corrected.
    pub fn inverted(&self) -> bool {
        self.upper < self.lower
    }

    /// Whether the two bounds coincide (the second-order point estimate).
    pub fn is_point_estimate(&self) -> bool {
        matches!(self.interval, Interval::HalfDp2LToD | Interval::AboveD)
    }

    pub fn contains(&self, delta_e: f64) -> bool {
        self.lower <= delta_e && delta_e <= self.upper
    }
}

/// 2 ln(3 + 2√2): centre-site bound on the lattice 1/r sum.
pub fn eta_plus() -> f64 {
    2.0 * (3.0 + 2.0 * 2f64.sqrt()).ln()
}

/// arcsinh(1): corner-site bound on the lattice 1/r sum.
pub fn eta_minus() -> f64 {
    1f64.asinh()
}

/// (ε₋, ε₊) = erf(q^∓1)/q^∓1 ... with q = (d−L)/(d+2L); see [`bound_bracket`].
pub fn epsilon_pair(d: f64, side: f64) -> (f64, f64) {
    let q = (d - side) / (d + 2.0 * side);
    let eps_minus = q * erf(1.0 / q);
    let eps_plus = erf(q) / q;
    (eps_minus, eps_plus)
}

/// Geometric factor correcting the disc-shaped near-field count for the
/// finite square: the square-to-(square + ring) area ratio times the ratio of
/// a 2R_eff square to the annulus between a and 2R_eff.
pub fn geometric_factor(side: f64, a: f64, r_eff: f64) -> f64 {
    let l2 = side * side;
    let r2 = r_eff * r_eff;
    l2 / (l2 + 4.0 * side * r_eff + PI * r2) * 4.0 * r2 / (PI * (4.0 * r2 - a * a))
}

/// Regime of `r_eff`. Boundaries belong to the lower regime.
pub fn classify(crystal: &SquareCrystal, d: f64, r_eff: f64) -> Interval {
    let l = crystal.side;
    if r_eff <= crystal.a {
        Interval::BelowA
    } else if r_eff <= l {
        Interval::AToL
    } else if r_eff <= 0.5 * (d - l) {
        Interval::LToHalfDmL
    } else if r_eff <= 0.5 * (d + 2.0 * l) {
        Interval::MidD
    } else if r_eff <= d {
        Interval::HalfDp2LToD
    } else {
        Interval::AboveD
    }
}

/// Bracket on ΔE at `r_eff` for a displacement `d` orthogonal to one side.
///
/// Requires d > L and r_eff > 0.
pub fn bound_bracket(crystal: &SquareCrystal, d: f64, r_eff: f64) -> Result<BoundBracket> {
    check_geometry(crystal, d, r_eff)?;
    Ok(bracket_in(crystal, d, r_eff, classify(crystal, d, r_eff)))
}

/// Evaluates the expressions of a given regime at `r_eff`, regardless of
/// whether `r_eff` lies inside that regime.
pub fn bound_bracket_for(
    crystal: &SquareCrystal,
    d: f64,
    r_eff: f64,
    interval: Interval,
) -> Result<BoundBracket> {
    check_geometry(crystal, d, r_eff)?;
    Ok(bracket_in(crystal, d, r_eff, interval))
}

fn check_geometry(crystal: &SquareCrystal, d: f64, r_eff: f64) -> Result<()> {
    if !(d > crystal.side) || !d.is_finite() {
        return Err(Error::Precondition(format!(
            "bounds require d > L (d = {d:e} m, L = {:e} m)",
            crystal.side
        )));
    }
    if !(r_eff > 0.0 && r_eff.is_finite()) {
        return Err(invalid("r_eff", format!("must be > 0, got {r_eff}")));
    }
    Ok(())
}

fn bracket_in(c: &SquareCrystal, d: f64, r: f64, interval: Interval) -> BoundBracket {
    let n = c.n_atoms;
    let a = c.a;
    let l = c.side;
    let sqrt_pi = PI.sqrt();
    let n32 = n * n.sqrt();
    let n2 = n * n;
    let self_term = n / (sqrt_pi * r);

    let (lo, hi) = match interval {
        Interval::BelowA => (
            self_term + eta_minus() * n32 / a - n2 / (d - l),
            self_term + eta_plus() * n32 / a - n2 / (d + l),
        ),
        Interval::AToL => {
            let fg = geometric_factor(l, a, r);
            (
                self_term + eta_minus() * n32 / a - n2 / (d - l) + 4.0 * n * r / (sqrt_pi * a * a)
                    - 2.0 * PI * n / a * fg * (2.0 * r / a - 1.0),
                self_term + eta_plus() * n32 / a - n2 / (d + l)
                    + 4.0 * n * r / (a * a) * (1.0 / sqrt_pi - 1.0),
            )
        }
        Interval::LToHalfDmL => (
            n2 / (sqrt_pi * r) - n2 / (d - l),
            n2 / (sqrt_pi * r) - n2 / (d + 2.0 * l),
        ),
        Interval::MidD => {
            let (eps_minus, eps_plus) = epsilon_pair(d, l);
            (
                n2 / (sqrt_pi * r) - eps_plus * n2 / (2.0 * r),
                n2 / (sqrt_pi * r) - eps_minus * n2 / (2.0 * r),
            )
        }
        Interval::HalfDp2LToD | Interval::AboveD => {
            let v = n2 * d * d / (12.0 * sqrt_pi * r * r * r);
            (v, v)
        }
    };
    let k = c.prefactor();
    BoundBracket {
        r_eff: r,
        lower: k * lo,
        upper: k * hi,
        interval,
    }
}

/// Lifts every lower bound to the largest lower bound found at equal or
/// larger R_eff. ΔE decreases with R_eff, so a lower bound at R' ≥ R also
/// bounds ΔE(R) from below.
pub fn refine_monotone(brackets: &mut [BoundBracket]) {
    brackets.sort_by(|x, y| x.r_eff.total_cmp(&y.r_eff));
    let mut best = f64::NEG_INFINITY;
    for b in brackets.iter_mut().rev() {
        best = best.max(b.lower);
        b.lower = best;
    }
}

/// Exponent (2D−1)/D of the plateau law.
pub fn plateau_exponent(dimension: u32) -> f64 {
    let d = dimension as f64;
    (2.0 * d - 1.0) / d
}

/// Plateau estimate of ΔE at R_eff ≈ a for a D-dimensional ball of N atoms on
/// a simple lattice of step `a`:
/// (8πGm²/a) · π^{D/2}/Γ(D/2) · N^{(2D−1)/D} / (2^{D−2}(D−1)).
pub fn plateau_delta_e(dimension: u32, n_atoms: f64, a: f64, mass: f64) -> Result<f64> {
    let gamma = gamma_half(dimension).ok_or_else(|| {
        invalid(
            "dimension",
            format!("plateau law needs D ∈ {{2, 3}}, got {dimension}"),
        )
    })?;
    if !(n_atoms >= 1.0) {
        return Err(invalid("n_atoms", "must be ≥ 1"));
    }
    let d = dimension as f64;
    let angular = PI.powf(0.5 * d) / gamma;
    Ok(8.0 * PI * G * mass * mass / a * angular * n_atoms.powf(plateau_exponent(dimension))
        / (2f64.powi(dimension as i32 - 2) * (d - 1.0)))
}

/// Least-squares prefactor C of ΔE ≈ C·N^p in log space, for lattices (such as
/// graphene) whose plateau constant has no closed form.
pub fn fit_plateau_prefactor(points: &[(f64, f64)], exponent: f64) -> f64 {
    let mean = points
        .iter()
        .map(|&(n, e)| e.ln() - exponent * n.ln())
        .sum::<f64>()
        / points.len() as f64;
    mean.exp()
}

/// Far-field ΔE ≈ (2/3)√π G m² N² d² / R_eff³.
pub fn far_field_delta_e(n_atoms: f64, mass: f64, d: f64, r_eff: f64) -> f64 {
    2.0 / 3.0 * PI.sqrt() * G * mass * mass * n_atoms * n_atoms * d * d / (r_eff * r_eff * r_eff)
}

/// Size and mass of a crystal, as needed by the far-field law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeSummary {
    pub n_atoms: f64,
    pub mass: f64,
    /// Largest side L, m.
    pub side: f64,
}

impl LatticeSummary {
    /// Requires equal masses across the basis.
    pub fn from_lattice(lat: &Lattice) -> Result<Self> {
        let m = lat.basis()[0].mass;
        if lat.basis().iter().any(|b| b.mass != m) {
            return Err(Error::UnsupportedLattice(
                "far-field law assumes equal atomic masses".into(),
            ));
        }
        Ok(LatticeSummary {
            n_atoms: lat.n_atoms() as f64,
            mass: m,
            side: lat.side_lengths().into_iter().fold(0.0, f64::max),
        })
    }
}

/// ħ / ΔE_far-field. Valid only for r_eff ≥ (d + 2L)/2.
pub fn far_field_tau(summary: &LatticeSummary, d: f64, r_eff: f64) -> Result<f64> {
    let edge = 0.5 * (d + 2.0 * summary.side);
    if !(r_eff >= edge) {
        return Err(Error::Precondition(format!(
            "far-field law requires r_eff ≥ (d + 2L)/2 = {edge:e} m, got {r_eff:e} m"
        )));
    }
    Ok(HBAR / far_field_delta_e(summary.n_atoms, summary.mass, d, r_eff))
}
