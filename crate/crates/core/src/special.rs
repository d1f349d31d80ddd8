//! Special functions needed by the kernel and the analytic estimates.

use std::f64::consts::PI;

const SQRT_PI: f64 = 1.772_453_850_905_516;

/// Error function, saturating to exactly 1 for arguments ≥ 6.
///
/// Backed by the musl/FreeBSD rational approximations (≤ 1 ulp).
#[inline]
pub fn erf(x: f64) -> f64 {
    if x >= 6.0 {
        1.0
    } else if x <= -6.0 {
        -1.0
    } else {
        libm::erf(x)
    }
}

/// Below this fraction of the smearing radius the smeared potential uses its
/// Taylor expansion instead of `erf(x)/x`.
pub const SERIES_SWITCH: f64 = 1e-6;

/// Smeared Newtonian potential `erf(x / 2R) / x` for a separation `x ≥ 0`.
///
/// Continuous through `x = 0`, where it equals `1 / (√π R)`.
#[inline]
pub fn smeared_inverse_distance(x: f64, r_eff: f64) -> f64 {
    Smearing::new(r_eff).potential(x)
}

/// Separations up to this fraction of R_eff are differenced through the power
/// series in (x/2R)², which avoids cancelling two nearly equal potentials.
const DIFFERENCE_SERIES_LIMIT: f64 = 0.5;

/// (−1)ⁿ / (n! (2n+1)) for n = 1..=13: erf(z)/z = 2/√π Σ aₙ z²ⁿ.
const ERF_SERIES: [f64; 13] = [
    -0.333_333_333_333_333_33,
    0.1,
    -0.023_809_523_809_523_809_524,
    0.004_629_629_629_629_629_629_6,
    -0.000_757_575_757_575_757_575_76,
    0.000_106_837_606_837_606_837_61,
    -1.322_751_322_751_322_751_3e-5,
    1.458_916_900_093_370_681_6e-6,
    -1.450_385_222_315_046_876_5e-7,
    1.312_253_296_380_280_507_3e-8,
    -1.089_222_103_714_857_338e-9,
    8.350_702_795_147_239_591_7e-11,
    -5.947_794_013_637_635_036_8e-12,
];

/// Largest (x/2R)² for which the first k series terms (k = 2, 3, …) leave a
/// relative truncation error below 1e-17, with a factor-two margin. Nine
/// terms cover the whole series region, (x/2R)² ≤ 1/16.
const SERIES_TERM_LIMITS: [f64; 7] = [3.4e-9, 2.8e-6, 8.6e-5, 6.9e-4, 2.8e-3, 8.0e-3, 1.7e-2];

/// Smeared potential at a fixed R_eff, with the per-radius constants hoisted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Smearing {
    r_eff: f64,
    inv_two_r: f64,
    at_zero: f64,
    series_below: f64,
    difference_below_sq: f64,
}

impl Smearing {
    pub fn new(r_eff: f64) -> Self {
        let limit = DIFFERENCE_SERIES_LIMIT * r_eff;
        Smearing {
            r_eff,
            inv_two_r: 0.5 / r_eff,
            at_zero: 1.0 / (SQRT_PI * r_eff),
            series_below: SERIES_SWITCH * r_eff,
            difference_below_sq: limit * limit,
        }
    }

    pub fn r_eff(&self) -> f64 {
        self.r_eff
    }

    /// `erf(x / 2R) / x`.
    #[inline]
    pub fn potential(&self, x: f64) -> f64 {
        self.potential_with_inverse(x, 1.0 / x)
    }

    /// `erf(x / 2R) / x` given `1/x`, which callers can share across radii.
    #[inline]
    pub fn potential_with_inverse(&self, x: f64, inv_x: f64) -> f64 {
        if x < self.series_below {
            let u = x / self.r_eff;
            return self.at_zero * (1.0 - u * u / 12.0);
        }
        let z = x * self.inv_two_r;
        if z >= 6.0 {
            inv_x
        } else {
            libm::erf(z) * inv_x
        }
    }

    /// Whether [`Smearing::difference`] takes the series branch for squared
    /// separations up to `max_sq`.
    #[inline]
    pub fn differences_by_series(&self, max_sq: f64) -> bool {
        max_sq <= self.difference_below_sq
    }

    /// `potential(x₁) − potential(x₂)` where `x₂² = x₁² + delta_sq`, computed
    /// from the series in (x/2R)² term by term. Only accurate while both
    /// separations are within R_eff/2; see [`Smearing::differences_by_series`].
    #[inline]
    pub fn series_difference(&self, x1_sq: f64, delta_sq: f64) -> f64 {
        let scale = self.inv_two_r * self.inv_two_r;
        let u1 = x1_sq * scale;
        let u2 = (x1_sq + delta_sq) * scale;
        let u_max = if u1 > u2 { u1 } else { u2 };
        let terms = 2 + SERIES_TERM_LIMITS
            .iter()
            .position(|&lim| u_max <= lim)
            .unwrap_or(SERIES_TERM_LIMITS.len());
        // hₙ = (u₂ⁿ − u₁ⁿ)/(u₂ − u₁) = u₂ hₙ₋₁ + u₁ⁿ⁻¹
        let mut h = 1.0;
        let mut u1_pow = 1.0;
        let mut acc = ERF_SERIES[0];
        for &a in &ERF_SERIES[1..terms] {
            u1_pow *= u1;
            h = u2 * h + u1_pow;
            acc += a * h;
        }
        -self.at_zero * delta_sq * scale * acc
    }

    /// `potential(x₁) − potential(x₂)` with `delta_sq = x₂² − x₁²` supplied
    /// separately so that it can be formed without cancellation.
    #[inline]
    pub fn difference(&self, x1_sq: f64, x2_sq: f64, delta_sq: f64) -> f64 {
        if self.differences_by_series(x1_sq) && self.differences_by_series(x2_sq) {
            self.series_difference(x1_sq, delta_sq)
        } else {
            self.potential(x1_sq.sqrt()) - self.potential(x2_sq.sqrt())
        }
    }
}

/// Γ(D/2) for D ∈ {2, 3}.
pub fn gamma_half(dimension: u32) -> Option<f64> {
    match dimension {
        2 => Some(1.0),
        3 => Some(0.5 * PI.sqrt()),
        _ => None,
    }
}
