//! Decoherence energy ΔE(d) of a displaced lattice.
//!
//! ΔE(d) = 8πG Σ_i Σ_j m_i m_j f(r_ij, R_eff, d), with
//! f(r, R, d) = erf(|r|/2R)/|r| − erf(|d−r|/2R)/|d−r|.
//!
//! [`delta_e_fast`] evaluates the sum over the weighted distance domain of the
//! lattice (linear in N); [`delta_e_brute`] evaluates the double sum directly
//! over explicit atom positions and serves as the reference.

use crate::consts::{G, HBAR};
use crate::error::{invalid, Error, Result};
use crate::lattice::{Atom, Lattice};
use crate::special::Smearing;
use crate::sum::NeumaierSum;
use crate::vec3::Vec3;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

/// Kernel evaluations allowed without `allow_long`.
pub const DEFAULT_TERM_BUDGET: u64 = 1_000_000_000_000;

/// Largest atom count the pairwise oracle accepts without an override.
pub const BRUTE_ATOM_CAP: u64 = 200_000;

/// Nominal single-core cost of one kernel term, used only for the runtime
/// estimate attached to a budget refusal.
const NOMINAL_SECS_PER_TERM: f64 = 25e-9;

/// Parameters of one superposition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuperpositionConfig {
    /// Separation of the two branches, m.
    pub d: Vec3,
    /// Smearing length R₀, m.
    pub r0: f64,
    /// Wavepacket width σ, m. Only the coherence calculation reads it.
    pub sigma: Option<f64>,
}

impl SuperpositionConfig {
    pub fn new(d: Vec3, r0: f64) -> Result<Self> {
        if !(r0 > 0.0 && r0.is_finite()) {
            return Err(invalid("r0", format!("must be > 0, got {r0}")));
        }
        if !d.is_finite() {
            return Err(invalid("d", "must be finite"));
        }
        Ok(SuperpositionConfig {
            d,
            r0,
            sigma: None,
        })
    }

    pub fn with_sigma(mut self, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(invalid("sigma", format!("must be > 0, got {sigma}")));
        }
        self.sigma = Some(sigma);
        Ok(self)
    }

    /// Effective smearing radius for a pair whose mean squared intrinsic
    /// radius is `radius_sq_mean`.
    #[inline]
    pub fn r_eff(&self, radius_sq_mean: f64) -> f64 {
        pair_r_eff(self.r0, radius_sq_mean)
    }
}

#[inline]
fn pair_r_eff(r0: f64, radius_sq_mean: f64) -> f64 {
    if radius_sq_mean == 0.0 {
        r0
    } else {
        (r0 * r0 + radius_sq_mean).sqrt()
    }
}

/// ΔE and the corresponding collapse time for one parameter point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollapseResult {
    /// J.
    pub delta_e: f64,
    /// ħ/ΔE, s. Infinite when ΔE = 0.
    pub tau: f64,
    pub n_atoms: u64,
    /// Kernel evaluations performed.
    pub term_count: u64,
    pub elapsed: Duration,
}

impl CollapseResult {
    fn new(delta_e: f64, n_atoms: u64, term_count: u64, elapsed: Duration) -> Self {
        let tau = if delta_e == 0.0 {
            f64::INFINITY
        } else {
            HBAR / delta_e
        };
        CollapseResult {
            delta_e,
            tau,
            n_atoms,
            term_count,
            elapsed,
        }
    }
}

/// f(r, R_eff, d), in 1/m.
#[inline]
pub fn pair_kernel(r: Vec3, r_eff: f64, d: Vec3) -> f64 {
    smeared_pair_kernel(&Smearing::new(r_eff), r, d)
}

#[inline]
fn smeared_pair_kernel(sm: &Smearing, r: Vec3, d: Vec3) -> f64 {
    let cross = d - r;
    // |d − r|² − |r|² = d·(d − 2r), formed without cancellation.
    sm.difference(r.dot(r), cross.dot(cross), d.dot(cross - r))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FastOptions {
    pub workers: usize,
    pub term_budget: u64,
    pub allow_long: bool,
}

impl Default for FastOptions {
    fn default() -> Self {
        FastOptions {
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            term_budget: DEFAULT_TERM_BUDGET,
            allow_long: false,
        }
    }
}

impl FastOptions {
    pub fn with_workers(workers: usize) -> Self {
        FastOptions {
            workers,
            ..Default::default()
        }
    }
}

/// Progress callback: `(slabs_done, slabs_total)`.
pub type Progress<'a> = &'a (dyn Fn(u64, u64) + Sync);

/// ΔE via the weighted distance domain.
pub fn delta_e_fast(lat: &Lattice, cfg: &SuperpositionConfig, workers: usize) -> Result<CollapseResult> {
    delta_e_fast_with(lat, cfg, &FastOptions::with_workers(workers), None)
}

/// ΔE via the weighted distance domain, with explicit options.
///
/// The domain is cut into one slab per value of n_1. Each slab is summed with
/// Neumaier compensation and the slab sums are combined in ascending n_1, so
/// the result is bitwise independent of `opts.workers`.
pub fn delta_e_fast_with(
    lat: &Lattice,
    cfg: &SuperpositionConfig,
    opts: &FastOptions,
    progress: Option<Progress<'_>>,
) -> Result<CollapseResult> {
    let terms = lat.domain_len();
    if terms > opts.term_budget && !opts.allow_long {
        return Err(Error::BudgetExceeded {
            terms,
            budget: opts.term_budget,
            estimated_secs: terms as f64 * NOMINAL_SECS_PER_TERM / opts.workers.max(1) as f64,
        });
    }
    let start = Instant::now();
    let slabs: Vec<i64> = lat.n1_range().collect();
    let total = slabs.len() as u64;
    let done = AtomicU64::new(0);

    let smearings: Vec<Smearing> = lat
        .basis_pairs()
        .iter()
        .map(|p| Smearing::new(cfg.r_eff(p.radius_sq_mean)))
        .collect();

    let slab_sum = |n1: i64| {
        let mut acc = NeumaierSum::new();
        for e in lat.domain_slabs(n1..=n1) {
            let f = smeared_pair_kernel(&smearings[e.gamma], e.r, cfg.d);
            acc.add(e.weight as f64 * e.mass_product * f);
        }
        if let Some(cb) = progress {
            cb(done.fetch_add(1, Ordering::Relaxed) + 1, total);
        }
        acc
    };

    let partials: Vec<NeumaierSum> = if opts.workers <= 1 {
        slabs.iter().map(|&n1| slab_sum(n1)).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.workers)
            .build()
            .map_err(|e| invalid("workers", e.to_string()))?;
        pool.install(|| slabs.par_iter().map(|&n1| slab_sum(n1)).collect())
    };

    let mut total_sum = NeumaierSum::new();
    for p in &partials {
        total_sum.merge(p);
    }
    let delta_e = 8.0 * PI * G * total_sum.value();
    Ok(CollapseResult::new(
        delta_e,
        lat.n_atoms(),
        terms,
        start.elapsed(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BruteOptions {
    pub workers: usize,
    /// Permit atom counts above [`BRUTE_ATOM_CAP`].
    pub override_cap: bool,
}

impl Default for BruteOptions {
    fn default() -> Self {
        BruteOptions {
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            override_cap: false,
        }
    }
}

/// ΔE by the direct double sum over all N² ordered atom pairs.
pub fn delta_e_brute(lat: &Lattice, cfg: &SuperpositionConfig) -> Result<CollapseResult> {
    check_brute_cap(lat.n_atoms(), &BruteOptions::default())?;
    let atoms = lat.atoms();
    Ok(delta_e_brute_atoms(&atoms, std::slice::from_ref(cfg), &BruteOptions::default())?[0])
}

/// Direct double sum over an explicit atom list for several configurations
/// at once. Each atom pair is visited once; distances shared between
/// configurations (same R₀ or same d) are computed once per pair.
///
/// Row sums are compensated and combined in atom order.
pub fn delta_e_brute_atoms(
    atoms: &[Atom],
    cfgs: &[SuperpositionConfig],
    opts: &BruteOptions,
) -> Result<Vec<CollapseResult>> {
    check_brute_cap(atoms.len() as u64, opts)?;
    let start = Instant::now();

    let mut r0s: Vec<f64> = Vec::new();
    let mut ds: Vec<Vec3> = Vec::new();
    let index: Vec<(usize, usize)> = cfgs
        .iter()
        .map(|c| {
            let ri = position_or_push(&mut r0s, c.r0);
            let di = position_or_push(&mut ds, c.d);
            (ri, di)
        })
        .collect();

    // (i, j) and (j, i) share the self term and differ in the sign of r, so
    // row i visits j ≤ i and adds both orderings.
    let row = |(i, xi): (usize, &Atom)| {
        let mut acc = vec![NeumaierSum::new(); cfgs.len()];
        let mut smearings: Vec<Smearing> = r0s.iter().map(|&r0| Smearing::new(r0)).collect();
        let mut last_rsm = 0.0;
        let mut self_term = vec![0.0; r0s.len()];
        let mut cross = vec![[CrossTerm::default(); 2]; ds.len()];
        for (j, xj) in atoms[..=i].iter().enumerate() {
            let diagonal = j == i;
            let r = xi.position - xj.position;
            let x1_sq = r.dot(r);
            let x1 = x1_sq.sqrt();
            let inv_x1 = 1.0 / x1;
            let mp = if diagonal { 1.0 } else { 2.0 } * xi.mass * xj.mass;
            let rsm = 0.5 * (xi.radius * xi.radius + xj.radius * xj.radius);
            if rsm != last_rsm {
                for (sm, &r0) in smearings.iter_mut().zip(&r0s) {
                    *sm = Smearing::new(pair_r_eff(r0, rsm));
                }
                last_rsm = rsm;
            }
            // Filled on first use; the series branch never needs it.
            self_term.fill(f64::NAN);
            for (c, &d) in cross.iter_mut().zip(&ds) {
                let minus = d - r;
                c[0] = CrossTerm::new(minus, d.dot(minus - r));
                if !diagonal {
                    let plus = d + r;
                    c[1] = CrossTerm::new(plus, d.dot(plus + r));
                }
            }
            for (a, &(ri, di)) in acc.iter_mut().zip(&index) {
                let sm = &smearings[ri];
                let mut own = || {
                    if self_term[ri].is_nan() {
                        self_term[ri] = sm.potential_with_inverse(x1, inv_x1);
                    }
                    self_term[ri]
                };
                let f = if diagonal {
                    cross[di][0].kernel(sm, x1_sq, &mut own)
                } else {
                    0.5 * (cross[di][0].kernel(sm, x1_sq, &mut own)
                        + cross[di][1].kernel(sm, x1_sq, &mut own))
                };
                a.add(mp * f);
            }
        }
        acc
    };

    let rows: Vec<Vec<NeumaierSum>> = if opts.workers <= 1 {
        atoms.iter().enumerate().map(row).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.workers)
            .build()
            .map_err(|e| invalid("workers", e.to_string()))?;
        pool.install(|| atoms.par_iter().enumerate().map(row).collect())
    };

    let elapsed = start.elapsed();
    let n = atoms.len() as u64;
    let pairs = n * n;
    Ok((0..cfgs.len())
        .map(|c| {
            let mut total = NeumaierSum::new();
            for r in &rows {
                total.merge(&r[c]);
            }
            CollapseResult::new(8.0 * PI * G * total.value(), n, pairs, elapsed)
        })
        .collect())
}

/// Cross-branch separation of one atom pair for one displacement.
#[derive(Debug, Clone, Copy, Default)]
struct CrossTerm {
    norm: f64,
    inv_norm: f64,
    norm_sq: f64,
    /// Squared cross separation minus squared pair separation.
    delta_sq: f64,
}

impl CrossTerm {
    #[inline]
    fn new(v: Vec3, delta_sq: f64) -> Self {
        let norm_sq = v.dot(v);
        let norm = norm_sq.sqrt();
        CrossTerm {
            norm,
            inv_norm: 1.0 / norm,
            norm_sq,
            delta_sq,
        }
    }

    /// f for this pair; `own` yields the pair's own smeared potential.
    #[inline]
    fn kernel(&self, sm: &Smearing, x1_sq: f64, own: &mut impl FnMut() -> f64) -> f64 {
        if sm.differences_by_series(x1_sq) && sm.differences_by_series(self.norm_sq) {
            sm.series_difference(x1_sq, self.delta_sq)
        } else {
            own() - sm.potential_with_inverse(self.norm, self.inv_norm)
        }
    }
}

fn check_brute_cap(n_atoms: u64, opts: &BruteOptions) -> Result<()> {
    if n_atoms > BRUTE_ATOM_CAP && !opts.override_cap {
        return Err(Error::BruteCapExceeded {
            n_atoms,
            cap: BRUTE_ATOM_CAP,
            pairs: (n_atoms as u128) * (n_atoms as u128),
        });
    }
    Ok(())
}

fn position_or_push<T: PartialEq + Copy>(v: &mut Vec<T>, x: T) -> usize {
    match v.iter().position(|&y| y == x) {
        Some(i) => i,
        None => {
            v.push(x);
            v.len() - 1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consts::ANGSTROM;
    use crate::special::erf;

    const M: f64 = 2.0e-26;

    fn cfg(dx: f64, r0: f64) -> SuperpositionConfig {
        SuperpositionConfig::new(Vec3::xy(dx, 0.0), r0).unwrap()
    }

    #[test]
    fn kernel_vanishes_without_displacement() {
        assert_eq!(pair_kernel(Vec3::ZERO, ANGSTROM, Vec3::ZERO), 0.0);
        let r = Vec3::xy(3.1e-10, -0.7e-10);
        assert_eq!(pair_kernel(r, ANGSTROM, Vec3::ZERO), 0.0);
    }

    #[test]
    fn kernel_self_term_far_displacement() {
        let f = pair_kernel(Vec3::ZERO, ANGSTROM, Vec3::xy(1.0, 0.0));
        let want = 5_641_895_835.477_563;
        assert!(((f - want + 1.0) / want).abs() < 1e-15);
    }

    #[test]
    fn kernel_self_term_at_two_angstrom() {
        // 1/(√π R) − erf(1)/(2 Å), evaluated in 40-digit arithmetic.
        let f = pair_kernel(Vec3::ZERO, ANGSTROM, Vec3::xy(2.0 * ANGSTROM, 0.0));
        let want = 1_428_391_870.728_988_5;
        assert!(((f - want) / want).abs() < 1e-14, "{f}");
    }

    #[test]
    fn zero_displacement_gives_infinite_tau() {
        let lat = Lattice::graphene_sheet(3, 4).unwrap();
        let r = delta_e_fast(&lat, &cfg(0.0, ANGSTROM), 1).unwrap();
        assert_eq!(r.delta_e, 0.0);
        assert_eq!(r.tau, f64::INFINITY);
    }

    #[test]
    fn single_atom_closed_form() {
        let lat = Lattice::square(1, 1, ANGSTROM, M).unwrap();
        let d = 7.0 * ANGSTROM;
        let r0 = 1.5 * ANGSTROM;
        let want = 8.0 * PI * G * M * M * (1.0 / (PI.sqrt() * r0) - erf(d / (2.0 * r0)) / d);
        let fast = delta_e_fast(&lat, &cfg(d, r0), 1).unwrap();
        let brute = delta_e_brute(&lat, &cfg(d, r0)).unwrap();
        assert!((fast.delta_e - want).abs() / want < 1e-15);
        assert_eq!(fast.delta_e, brute.delta_e);
        assert_eq!(fast.term_count, 1);
    }

    #[test]
    fn three_by_three_matches_direct_pairs() {
        // Independent reference: 81 pairs from integer coordinates.
        let lat = Lattice::square(3, 3, ANGSTROM, M).unwrap();
        let c = cfg(50.0 * ANGSTROM, ANGSTROM);
        let mut want = 0.0;
        for i in 0..9i64 {
            for j in 0..9i64 {
                let (xi, yi, xj, yj) = (i / 3, i % 3, j / 3, j % 3);
                let r = Vec3::xy((xi - xj) as f64 * ANGSTROM, (yi - yj) as f64 * ANGSTROM);
                want += pair_kernel(r, ANGSTROM, c.d);
            }
        }
        want *= 8.0 * PI * G * M * M;
        let fast = delta_e_fast(&lat, &c, 1).unwrap();
        assert!((fast.delta_e - want).abs() / want <= 1e-12);
        assert_eq!(fast.term_count, 25);
    }

    #[test]
    fn workers_do_not_change_the_bits() {
        let lat = Lattice::graphene_sheet(17, 11).unwrap();
        let c = cfg(40.0 * ANGSTROM, 2.0 * ANGSTROM);
        let one = delta_e_fast(&lat, &c, 1).unwrap().delta_e;
        for w in [2, 3, 8] {
            assert_eq!(delta_e_fast(&lat, &c, w).unwrap().delta_e, one);
        }
    }

    #[test]
    fn budget_refusal_reports_estimate() {
        let lat = Lattice::graphene_sheet(100_000, 100_000).unwrap();
        let opts = FastOptions {
            workers: 1,
            term_budget: 1_000_000,
            allow_long: false,
        };
        match delta_e_fast_with(&lat, &cfg(1e-4, ANGSTROM), &opts, None) {
            Err(Error::BudgetExceeded {
                terms,
                estimated_secs,
                ..
            }) => {
                assert_eq!(terms, lat.domain_len());
                assert!(estimated_secs > 1000.0);
            }
            other => panic!("expected refusal, got {other:?}"),
        }
    }

    #[test]
    fn paper_scale_plate_fits_default_budget() {
        let lat = Lattice::graphene_sheet(100_000, 100_000).unwrap();
        assert!(lat.domain_len() < DEFAULT_TERM_BUDGET);
    }

    #[test]
    fn brute_cap_refusal() {
        let lat = Lattice::square(500, 500, ANGSTROM, M).unwrap();
        assert!(matches!(
            delta_e_brute(&lat, &cfg(1e-6, ANGSTROM)),
            Err(Error::BruteCapExceeded { n_atoms: 250_000, .. })
        ));
    }

    #[test]
    fn batch_brute_matches_single_calls() {
        let lat = Lattice::graphene_sheet(4, 3).unwrap();
        let cfgs = [
            cfg(30.0 * ANGSTROM, ANGSTROM),
            cfg(30.0 * ANGSTROM, 5.0 * ANGSTROM),
            cfg(60.0 * ANGSTROM, ANGSTROM),
        ];
        let atoms = lat.atoms();
        let batch = delta_e_brute_atoms(&atoms, &cfgs, &BruteOptions::default()).unwrap();
        for (c, b) in cfgs.iter().zip(&batch) {
            assert_eq!(delta_e_brute(&lat, c).unwrap().delta_e, b.delta_e);
        }
    }

    #[test]
    fn rejects_nonpositive_r0() {
        assert!(SuperpositionConfig::new(Vec3::ZERO, 0.0).is_err());
        assert!(SuperpositionConfig::new(Vec3::ZERO, f64::NAN).is_err());
        assert!(cfg(1.0, 1.0).with_sigma(-1.0).is_err());
    }

    #[test]
    fn pairwise_radius_enters_r_eff() {
        let c = cfg(1.0, 3.0);
        assert_eq!(c.r_eff(0.0), 3.0);
        assert_eq!(c.r_eff(16.0), 5.0);
    }
}
