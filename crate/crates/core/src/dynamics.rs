//! From ΔE to observable decay times and coherences.

use crate::consts::HBAR;
use crate::error::{invalid, Error, Result};
use std::f64::consts::PI;

/// Below this Ω_C·t, g(t) is evaluated from its Taylor series.
const G_SERIES_SWITCH: f64 = 1e-4;

/// Noise correlation model of the collapse field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ColoredNoiseModel {
    /// Delta-correlated noise, g(t) = t.
    White,
    /// f(t) = Ω_C e^{−Ω_C|t|}/2, cutoff in rad/s.
    Exponential { omega_c: f64 },
}

impl ColoredNoiseModel {
    /// Maps an infinite cutoff to [`ColoredNoiseModel::White`].
    pub fn from_omega(omega_c: f64) -> Result<Self> {
        if omega_c == f64::INFINITY {
            Ok(ColoredNoiseModel::White)
        } else if omega_c > 0.0 && omega_c.is_finite() {
            Ok(ColoredNoiseModel::Exponential { omega_c })
        } else {
            Err(invalid("omega_c", format!("must be > 0 or infinite, got {omega_c}")))
        }
    }
}

/// ħ/ΔE, infinite at ΔE = 0.
pub fn tau_white(delta_e: f64) -> Result<f64> {
    if !(delta_e >= 0.0) {
        return Err(invalid("delta_e", format!("must be ≥ 0, got {delta_e}")));
    }
    Ok(if delta_e == 0.0 {
        f64::INFINITY
    } else {
        HBAR / delta_e
    })
}

/// Accumulated noise correlation g(t) = t[1 − (1 − e^{−Ω_C t})/(Ω_C t)].
pub fn g_exponential(t: f64, noise: ColoredNoiseModel) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(invalid("t", format!("must be ≥ 0, got {t}")));
    }
    Ok(match noise {
        ColoredNoiseModel::White => t,
        ColoredNoiseModel::Exponential { omega_c } => g_unchecked(t, omega_c),
    })
}

#[inline]
fn g_unchecked(t: f64, omega_c: f64) -> f64 {
    let x = omega_c * t;
    if x < G_SERIES_SWITCH {
        t * x * (0.5 - x * (1.0 / 6.0 - x / 24.0))
    } else {
        t * (x + (-x).exp_m1()) / x
    }
}

/// τ(d, t) = (ħ/ΔE)·t/g(t).
pub fn tau_colored(delta_e: f64, t: f64, noise: ColoredNoiseModel) -> Result<f64> {
    let tw = tau_white(delta_e)?;
    if !(t > 0.0) {
        return Err(invalid("t", format!("must be > 0, got {t}")));
    }
    let g = g_exponential(t, noise)?;
    Ok(tw * (t / g))
}

/// Time t* at which ΔE·g(t*)/ħ = 1; reduces to ħ/ΔE for white noise.
///
/// Since t − 1/Ω_C < g(t) ≤ t, the root lies in [τ_w, τ_w + 1/Ω_C]; it is
/// found by bisection down to adjacent floats.
pub fn colored_collapse_time(delta_e: f64, noise: ColoredNoiseModel) -> Result<f64> {
    let tw = tau_white(delta_e)?;
    let omega_c = match noise {
        _ if tw.is_infinite() => return Ok(f64::INFINITY),
        ColoredNoiseModel::White => return Ok(tw),
        ColoredNoiseModel::Exponential { omega_c } => omega_c,
    };
    let (mut lo, mut hi) = (tw, tw + 1.0 / omega_c);
    for _ in 0..2100 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g_unchecked(mid, omega_c) < tw {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// Centre-of-mass superposition of two Gaussians at ±d/2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceConfig {
    /// Total mass M, kg.
    pub mass: f64,
    /// Gaussian width σ, m.
    pub sigma: f64,
    /// Separation, m.
    pub d: f64,
    /// J.
    pub delta_e: f64,
    /// s.
    pub t: f64,
}

impl CoherenceConfig {
    pub fn new(mass: f64, sigma: f64, d: f64, delta_e: f64, t: f64) -> Result<Self> {
        for (name, v) in [("mass", mass), ("sigma", sigma)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("must be > 0, got {v}")));
            }
        }
        if !(delta_e >= 0.0) {
            return Err(invalid("delta_e", format!("must be ≥ 0, got {delta_e}")));
        }
        if !(t >= 0.0) {
            return Err(invalid("t", format!("must be ≥ 0, got {t}")));
        }
        if !(d > 3.0 * sigma) {
            return Err(Error::Precondition(format!(
                "coherence formulas assume well separated packets, need d > 3σ (d = {d:e} m, σ = {sigma:e} m)"
            )));
        }
        Ok(CoherenceConfig {
            mass,
            sigma,
            d,
            delta_e,
            t,
        })
    }

    /// Free-spreading time Mσ²/ħ.
    pub fn spreading_time(&self) -> f64 {
        self.mass * self.sigma * self.sigma / HBAR
    }

    /// False once t ≥ 10⁻²·Mσ²/ħ, where free spreading is no longer small.
    pub fn is_short_time(&self) -> bool {
        self.t < 1e-2 * self.spreading_time()
    }

    fn norm_sq(&self) -> f64 {
        let s = PI.sqrt() * self.sigma;
        let r = self.d / self.sigma;
        2.0 * s * s * s * (1.0 + (-0.25 * r * r).exp())
    }

    fn decay(&self) -> f64 {
        (-self.delta_e * self.t / HBAR).exp()
    }
}

/// The three contributions to ⟨−d/2|ρ(t)|d/2⟩ and their sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceElements {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub sum: f64,
    /// Copy of [`CoherenceConfig::is_short_time`].
    pub valid: bool,
}

/// Off-diagonal element including free spreading of the packets.
pub fn coherence_elements(cfg: &CoherenceConfig) -> CoherenceElements {
    let s = cfg.t / cfg.spreading_time();
    let one_s2 = 1.0 + s * s;
    let r2 = (cfg.d / cfg.sigma).powi(2);
    let k1 = one_s2.powf(-1.5) * cfg.decay() / cfg.norm_sq();
    let k2 = (-r2 / one_s2).exp() * k1;
    let k3 = 2.0 * (-0.5 * r2 / one_s2).exp() * (s / one_s2 * 0.5 * r2).cos() * k1;
    CoherenceElements {
        k1,
        k2,
        k3,
        sum: k1 + k2 + k3,
        valid: cfg.is_short_time(),
    }
}

/// Off-diagonal element with the free Hamiltonian dropped.
pub fn coherence_neglect_h(cfg: &CoherenceConfig) -> f64 {
    let r2 = (cfg.d / cfg.sigma).powi(2);
    let overlap = 1.0 + (-0.5 * r2).exp();
    overlap * overlap * cfg.decay() / cfg.norm_sq()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn colored(omega_c: f64) -> ColoredNoiseModel {
        ColoredNoiseModel::from_omega(omega_c).unwrap()
    }

    #[test]
    fn tau_white_basics() {
        assert!((tau_white(HBAR / 0.01).unwrap() - 0.01).abs() < 1e-17);
        assert_eq!(tau_white(0.0).unwrap(), f64::INFINITY);
        assert!(tau_white(-1e-30).is_err());
    }

    #[test]
    fn white_noise_limit() {
        let w = colored(f64::INFINITY);
        assert_eq!(w, ColoredNoiseModel::White);
        assert_eq!(g_exponential(3.5, w).unwrap(), 3.5);
        assert_eq!(tau_colored(1e-33, 2.0, w).unwrap(), tau_white(1e-33).unwrap());
        assert_eq!(colored_collapse_time(1e-33, w).unwrap(), tau_white(1e-33).unwrap());
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(ColoredNoiseModel::from_omega(0.0).is_err());
        assert!(ColoredNoiseModel::from_omega(f64::NAN).is_err());
        assert!(g_exponential(-1.0, colored(1.0)).is_err());
        assert!(tau_colored(1e-33, 0.0, colored(1.0)).is_err());
        assert_eq!(colored_collapse_time(0.0, colored(1.0)).unwrap(), f64::INFINITY);
    }

    #[test]
    fn small_argument_series() {
        // Ω_C t = 1e-6; reference from 40-digit evaluation of the closed form.
        let omega = 1e-6;
        let g = g_exponential(1.0, colored(omega)).unwrap();
        assert!((g / 4.999_998_333_333_749_547e-7 - 1.0).abs() < 1e-15);
        assert!((g / (0.5 * omega) - 1.0).abs() <= 1e-6);
    }

    #[test]
    fn series_and_closed_form_meet() {
        let below = g_unchecked(1.0, G_SERIES_SWITCH * (1.0 - 1e-12));
        let above = g_unchecked(1.0, G_SERIES_SWITCH);
        assert!((below / above - 1.0).abs() < 1e-11);
    }

    #[test]
    fn large_argument_asymptote() {
        let (de, omega, t) = (1e-33, 1e3, 10.0);
        let tc = tau_colored(de, t, colored(omega)).unwrap();
        let want = tau_white(de).unwrap() * (1.0 + 1.0 / (omega * t));
        assert!((tc / want - 1.0).abs() < 1e-6);
    }

    #[test]
    fn slow_noise_inverts_the_series() {
        let de = HBAR / 1e-3;
        let omega = 1e-3;
        let tw = tau_white(de).unwrap();
        let ts = colored_collapse_time(de, colored(omega)).unwrap();
        let approx = (2.0 * tw / omega).sqrt();
        assert!((ts / approx - 1.0).abs() < 1e-3);
    }

    #[test]
    fn coherence_at_time_zero_is_static_overlap() {
        let cfg = CoherenceConfig::new(1e-15, 1e-8, 1e-7, 1e-30, 0.0).unwrap();
        let el = coherence_elements(&cfg);
        assert!((el.sum / coherence_neglect_h(&cfg) - 1.0).abs() < 1e-15);
        assert!(el.valid);
    }

    #[test]
    fn cross_overlap_is_negligible_at_wide_separation() {
        let cfg = CoherenceConfig::new(1e-15, 1e-8, 20e-8, 0.0, 0.0).unwrap();
        let el = coherence_elements(&cfg);
        assert!(el.k2 / el.k1 < 1e-170);
    }

    #[test]
    fn coherence_preconditions() {
        assert!(matches!(
            CoherenceConfig::new(1e-15, 1e-8, 3e-8, 0.0, 0.0),
            Err(Error::Precondition(_))
        ));
        assert!(CoherenceConfig::new(0.0, 1e-8, 1e-6, 0.0, 0.0).is_err());
        let late = CoherenceConfig::new(1e-20, 1e-9, 1e-7, 0.0, 1.0).unwrap();
        assert!(!coherence_elements(&late).valid);
    }

    #[test]
    fn neglect_h_constant_without_delta_e() {
        let a = CoherenceConfig::new(1e-15, 1e-8, 1e-7, 0.0, 0.0).unwrap();
        let b = CoherenceConfig { t: 5.0, ..a };
        assert_eq!(coherence_neglect_h(&a), coherence_neglect_h(&b));
    }

    proptest! {
        #[test]
        fn g_below_t_and_increasing(
            log_omega in -6.0f64..6.0,
            log_t in -6.0f64..6.0,
            step in 1.0001f64..10.0,
        ) {
            let noise = colored(10f64.powf(log_omega));
            let t = 10f64.powf(log_t);
            let g = g_exponential(t, noise).unwrap();
            prop_assert!(g > 0.0 && g < t);
            prop_assert!(g_exponential(t * step, noise).unwrap() > g);
        }

        #[test]
        fn collapse_time_residual(
            log_de in -40.0f64..-28.0,
            log_omega in -6.0f64..8.0,
        ) {
            let de = 10f64.powf(log_de);
            let noise = colored(10f64.powf(log_omega));
            let ts = colored_collapse_time(de, noise).unwrap();
            let residual = de * g_exponential(ts, noise).unwrap() / HBAR;
            prop_assert!((residual - 1.0).abs() <= 1e-9);
            prop_assert!(ts >= tau_white(de).unwrap());
        }
    }
}
