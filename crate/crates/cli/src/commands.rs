use crate::config::{log_grid, longest_side, ConfigError, RunConfig};
use crate::progress::Ticker;
use crate::table::{fmt_f64, read_sweep, write_sweep, write_table, SweepRow};
use anyhow::Context;
use dpcollapse_core::analytics::{bound_bracket, refine_monotone, SquareCrystal};
use dpcollapse_core::consts::{HBAR, TAU_OBS};
use dpcollapse_core::dynamics::{
    coherence_elements, coherence_neglect_h, colored_collapse_time, g_exponential, tau_colored,
    tau_white,
};
use dpcollapse_core::fit::loglog_fit;
use dpcollapse_core::kernel::{delta_e_brute_atoms, delta_e_fast_with, BruteOptions, FastOptions};
use dpcollapse_core::{
    BoundBracket, CoherenceConfig, CollapseResult, ColoredNoiseModel, Lattice, SuperpositionConfig,
};
use serde::Serialize;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::time::Duration;

/// How a successful run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Complete,
    /// Every τ stayed above τ_obs.
    NoCrossing,
    /// A self-check (oracle) did not meet its threshold.
    CheckFailed,
}

pub struct RunFlags {
    pub quiet: bool,
    pub timing: bool,
}

fn output(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn evaluate(
    lat: &Lattice,
    sc: &SuperpositionConfig,
    opts: &FastOptions,
    ticker: &Ticker,
    step: usize,
    steps: usize,
) -> dpcollapse_core::Result<CollapseResult> {
    let progress = |done: u64, total: u64| {
        ticker.update(step as f64 + done as f64 / total as f64, steps as f64);
    };
    delta_e_fast_with(lat, sc, opts, Some(&progress))
}

fn r_eff_of(lat: &Lattice, sc: &SuperpositionConfig) -> f64 {
    let r = lat.basis()[0].radius;
    sc.r_eff(r * r)
}

/// Square-crystal bracket, when the geometry is one the bounds cover.
fn bracket_if_applicable(lat: &Lattice, sc: &SuperpositionConfig, r_eff: f64) -> Option<BoundBracket> {
    let crystal = SquareCrystal::from_lattice(lat).ok()?;
    let d = sc.d.norm();
    let v = lat.vectors();
    let orthogonal_to_a_side = v
        .iter()
        .any(|a| (sc.d.dot(*a)).abs() <= 1e-12 * d * a.norm());
    if !orthogonal_to_a_side {
        return None;
    }
    bound_bracket(&crystal, d, r_eff).ok()
}

fn collapse_time(delta_e: f64, noise: ColoredNoiseModel) -> dpcollapse_core::Result<f64> {
    if delta_e == 0.0 {
        Ok(f64::INFINITY)
    } else {
        colored_collapse_time(delta_e, noise)
    }
}

fn wall_ms(elapsed: Duration, timing: bool) -> Option<f64> {
    timing.then_some(elapsed.as_secs_f64() * 1e3)
}

pub fn sweep(cfg: &RunConfig, flags: &RunFlags) -> anyhow::Result<Outcome> {
    let lat = cfg.build_lattice()?;
    let grid = cfg.r0_grid()?;
    let noise = cfg.noise()?;
    let opts = cfg.fast_options();
    let ticker = Ticker::new("sweep", flags.quiet);
    let mut rows = Vec::with_capacity(grid.len());
    for (k, &r0) in grid.iter().enumerate() {
        let sc = cfg.superposition(&lat, r0)?;
        let res = evaluate(&lat, &sc, &opts, &ticker, k, grid.len())?;
        let r_eff = r_eff_of(&lat, &sc);
        let tau = collapse_time(res.delta_e, noise)?;
        let bracket = bracket_if_applicable(&lat, &sc, r_eff);
        rows.push(SweepRow {
            r0,
            r_eff,
            n_atoms: res.n_atoms,
            d: sc.d.norm(),
            delta_e: Some(res.delta_e),
            tau: Some(tau),
            tau_obs_ratio: Some(tau / TAU_OBS),
            bound_lower: bracket.map(|b| b.lower),
            bound_upper: bracket.map(|b| b.upper),
            wall_ms: wall_ms(res.elapsed, flags.timing),
            term_count: Some(res.term_count),
        });
    }
    ticker.finish();
    write_sweep(output(cfg.out.path.as_deref())?, &rows)?;
    Ok(report_crossing(&rows, flags.quiet))
}

/// Largest R₀ with τ ≤ τ_obs, log-interpolated against the next grid point.
pub fn upper_crossing(rows: &[SweepRow]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.tau.map(|t| (r.r0, t)))
        .collect();
    let last = pts.iter().rposition(|&(_, t)| t <= TAU_OBS)?;
    match pts.get(last + 1) {
        Some(&(r_b, t_b)) if t_b.is_finite() => {
            let (r_a, t_a) = pts[last];
            let f = (TAU_OBS.ln() - t_a.ln()) / (t_b.ln() - t_a.ln());
            Some((r_a.ln() + f * (r_b.ln() - r_a.ln())).exp())
        }
        _ => Some(pts[last].0),
    }
}

fn report_crossing(rows: &[SweepRow], quiet: bool) -> Outcome {
    let min_ratio = rows
        .iter()
        .filter_map(|r| r.tau_obs_ratio)
        .fold(f64::INFINITY, f64::min);
    match upper_crossing(rows) {
        Some(r) => {
            if !quiet {
                eprintln!("τ ≤ τ_obs up to R₀ ≈ {r:.3e} m (min τ/τ_obs = {min_ratio:.3e})");
            }
            Outcome::Complete
        }
        None => {
            if !quiet {
                eprintln!("no τ_obs crossing: min τ/τ_obs = {min_ratio:.3e}");
            }
            Outcome::NoCrossing
        }
    }
}

pub fn bounds(cfg: &RunConfig, flags: &RunFlags, refine: bool, numerics: bool) -> anyhow::Result<Outcome> {
    let lat = cfg.build_lattice()?;
    let crystal = SquareCrystal::from_lattice(&lat)?;
    let grid = cfg.r0_grid()?;
    let opts = cfg.fast_options();
    let numerics = numerics && lat.domain_len() <= opts.term_budget;
    let mut brackets = Vec::with_capacity(grid.len());
    let mut sc_d = 0.0;
    for &r in &grid {
        let sc = cfg.superposition(&lat, r)?;
        sc_d = sc.d.norm();
        brackets.push(bound_bracket(&crystal, sc_d, r)?);
    }
    for b in brackets.iter().filter(|b| b.inverted()) {
        if !flags.quiet {
            eprintln!(
                "bound inversion at r_eff = {:.3e} m ({}): upper {:.3e} J < lower {:.3e} J",
                b.r_eff, b.interval, b.upper, b.lower
            );
        }
    }
    if refine {
        refine_monotone(&mut brackets);
    }
    let ticker = Ticker::new("bounds", flags.quiet || !numerics);
    let mut rows = Vec::with_capacity(grid.len());
    for (k, b) in brackets.iter().enumerate() {
        let mut row = SweepRow {
            r0: b.r_eff,
            r_eff: b.r_eff,
            n_atoms: lat.n_atoms(),
            d: sc_d,
            delta_e: None,
            tau: None,
            tau_obs_ratio: None,
            bound_lower: Some(b.lower),
            bound_upper: Some(b.upper),
            wall_ms: None,
            term_count: None,
        };
        if numerics {
            let sc = cfg.superposition(&lat, b.r_eff)?;
            let res = evaluate(&lat, &sc, &opts, &ticker, k, brackets.len())?;
            row.delta_e = Some(res.delta_e);
            row.tau = Some(res.tau);
            row.tau_obs_ratio = Some(res.tau / TAU_OBS);
            row.wall_ms = wall_ms(res.elapsed, flags.timing);
            row.term_count = Some(res.term_count);
        }
        rows.push(row);
    }
    ticker.finish();
    if numerics && !flags.quiet {
        let inside = rows
            .iter()
            .zip(&brackets)
            .filter(|(r, b)| r.delta_e.is_some_and(|e| b.contains(e)))
            .count();
        eprintln!("numerics inside [lower, upper] at {inside} of {} points", rows.len());
    }
    write_sweep(output(cfg.out.path.as_deref())?, &rows)?;
    Ok(Outcome::Complete)
}

#[derive(Serialize)]
struct OraclePoint {
    r0_m: f64,
    d_m: f64,
    fast_j: f64,
    brute_j: f64,
    rel_dev: f64,
}

#[derive(Serialize)]
struct OracleReport {
    n_atoms: u64,
    threshold: f64,
    max_rel_dev: f64,
    pass: bool,
    points: Vec<OraclePoint>,
}

pub const ORACLE_THRESHOLD: f64 = 1e-10;

pub fn oracle(cfg: &RunConfig, flags: &RunFlags, d_multiples: &[f64]) -> anyhow::Result<Outcome> {
    let lat = cfg.build_lattice()?;
    let grid = cfg.r0_grid()?;
    let side = longest_side(&lat);
    let axis = cfg.displacement(&lat)?;
    let axis = (1.0 / axis.norm()) * axis;
    let mut cfgs = Vec::new();
    for &r0 in &grid {
        for &k in d_multiples {
            if !(k > 0.0) {
                return Err(ConfigError(format!("--d-multiples must be > 0, got {k}")).into());
            }
            cfgs.push(SuperpositionConfig::new((k * side) * axis, r0)?);
        }
    }
    let brute = delta_e_brute_atoms(&lat.atoms(), &cfgs, &cfg.brute_options())?;
    let opts = cfg.fast_options();
    let ticker = Ticker::new("oracle", flags.quiet);
    let mut points = Vec::with_capacity(cfgs.len());
    for (k, (sc, b)) in cfgs.iter().zip(&brute).enumerate() {
        let fast = evaluate(&lat, sc, &opts, &ticker, k, cfgs.len())?;
        let rel_dev = if b.delta_e == 0.0 {
            (fast.delta_e - b.delta_e).abs()
        } else {
            ((fast.delta_e - b.delta_e) / b.delta_e).abs()
        };
        points.push(OraclePoint {
            r0_m: sc.r0,
            d_m: sc.d.norm(),
            fast_j: fast.delta_e,
            brute_j: b.delta_e,
            rel_dev,
        });
    }
    ticker.finish();
    let max_rel_dev = points.iter().map(|p| p.rel_dev).fold(0.0, f64::max);
    let report = OracleReport {
        n_atoms: lat.n_atoms(),
        threshold: ORACLE_THRESHOLD,
        max_rel_dev,
        pass: max_rel_dev <= ORACLE_THRESHOLD,
        points,
    };
    let mut out = output(cfg.out.path.as_deref())?;
    serde_json::to_writer_pretty(&mut out, &report)?;
    writeln!(out)?;
    out.flush()?;
    Ok(if report.pass {
        Outcome::Complete
    } else {
        Outcome::CheckFailed
    })
}

pub struct ScalingPlan<'a> {
    pub sides: &'a [u64],
    pub brute_sides: &'a [u64],
    pub repeats: usize,
}

fn best_of(repeats: usize, mut run: impl FnMut() -> anyhow::Result<Duration>) -> anyhow::Result<f64> {
    let mut best = f64::INFINITY;
    for _ in 0..repeats.max(1) {
        best = best.min(run()?.as_secs_f64());
    }
    Ok(best)
}

pub fn bench_scaling(cfg: &RunConfig, flags: &RunFlags, plan: &ScalingPlan<'_>) -> anyhow::Result<Outcome> {
    let r0 = cfg.sweep.r0_min.0;
    let opts = cfg.fast_options();
    let brute_opts = BruteOptions {
        workers: cfg.workers(),
        override_cap: cfg.exec.allow_long,
    };
    let mut table = Vec::new();
    let mut fits: Vec<(&str, Vec<(f64, f64)>)> = vec![("fast", Vec::new()), ("brute", Vec::new())];
    let total = plan.sides.len() + plan.brute_sides.len();
    let ticker = Ticker::new("bench", flags.quiet);
    let sized = |side: u64| cfg.build_lattice_with_side(side);
    for (k, &side) in plan.sides.iter().enumerate() {
        let lat = sized(side)?;
        let sc = cfg.superposition(&lat, r0)?;
        let mut terms = 0;
        let secs = best_of(plan.repeats, || {
            let r = delta_e_fast_with(&lat, &sc, &opts, None)?;
            terms = r.term_count;
            Ok(r.elapsed)
        })?;
        fits[0].1.push((lat.n_atoms() as f64, secs));
        table.push(vec![
            "fast".into(),
            lat.n_atoms().to_string(),
            fmt_f64(secs * 1e3),
            terms.to_string(),
        ]);
        ticker.update((k + 1) as f64, total as f64);
    }
    for (k, &side) in plan.brute_sides.iter().enumerate() {
        let lat = sized(side)?;
        let atoms = lat.atoms();
        let sc = [cfg.superposition(&lat, r0)?];
        let secs = best_of(plan.repeats, || {
            Ok(delta_e_brute_atoms(&atoms, &sc, &brute_opts)?[0].elapsed)
        })?;
        fits[1].1.push((lat.n_atoms() as f64, secs));
        table.push(vec![
            "brute".into(),
            lat.n_atoms().to_string(),
            fmt_f64(secs * 1e3),
            (lat.n_atoms() * lat.n_atoms()).to_string(),
        ]);
        ticker.update((plan.sides.len() + k + 1) as f64, total as f64);
    }
    ticker.finish();
    for (name, pts) in &fits {
        if let Some(fit) = loglog_fit(pts) {
            eprintln!("{name}: log-log slope {:.3} over {} sizes", fit.slope, pts.len());
        }
    }
    write_table(
        output(cfg.out.path.as_deref())?,
        &["path", "n_atoms", "wall_ms", "term_count"],
        &table,
    )?;
    Ok(Outcome::Complete)
}

/// ΔE from the config, or from the lattice at the smallest R₀.
fn delta_e_or_lattice(cfg: &RunConfig, given: Option<f64>, lat: &Lattice, quiet: bool) -> anyhow::Result<f64> {
    if let Some(e) = given {
        if !(e > 0.0 && e.is_finite()) {
            return Err(ConfigError(format!("ΔE must be > 0, got {e}")).into());
        }
        return Ok(e);
    }
    let sc = cfg.superposition(lat, cfg.sweep.r0_min.0)?;
    let ticker = Ticker::new("ΔE", quiet);
    let r = evaluate(lat, &sc, &cfg.fast_options(), &ticker, 0, 1)?;
    ticker.finish();
    Ok(r.delta_e)
}

pub fn colored(cfg: &RunConfig, flags: &RunFlags) -> anyhow::Result<Outcome> {
    let c = &cfg.colored;
    let omegas = log_grid(c.omega_min, c.omega_max, c.points, "colored.points")?;
    let lat = cfg.build_lattice()?;
    let de = delta_e_or_lattice(cfg, c.delta_e, &lat, flags.quiet)?;
    let tw = tau_white(de)?;
    let t = c.t.unwrap_or(tw);
    if !(t >= 0.0 && t.is_finite()) {
        return Err(ConfigError(format!("`colored.t` must be ≥ 0, got {t}")).into());
    }
    let mut table = Vec::with_capacity(omegas.len());
    for &w in &omegas {
        let noise = ColoredNoiseModel::from_omega(w)?;
        table.push(vec![
            fmt_f64(w),
            fmt_f64(de),
            fmt_f64(tw),
            fmt_f64(t),
            fmt_f64(g_exponential(t, noise)?),
            fmt_f64(tau_colored(de, t, noise)?),
            fmt_f64(colored_collapse_time(de, noise)?),
        ]);
    }
    write_table(
        output(cfg.out.path.as_deref())?,
        &[
            "omega_c_per_s",
            "delta_e_J",
            "tau_white_s",
            "t_s",
            "g_s",
            "tau_colored_s",
            "collapse_time_s",
        ],
        &table,
    )?;
    Ok(Outcome::Complete)
}

pub fn coherence(cfg: &RunConfig, flags: &RunFlags) -> anyhow::Result<Outcome> {
    let c = &cfg.coherence;
    let times = log_grid(c.t_min, c.t_max, c.points, "coherence.points")?;
    let sigma = cfg
        .superposition
        .sigma
        .ok_or_else(|| ConfigError("`superposition.sigma` is required for coherence".into()))?
        .0;
    let lat = cfg.build_lattice()?;
    let mass = c.mass.unwrap_or_else(|| {
        lat.n_cells() as f64 * lat.basis().iter().map(|b| b.mass).sum::<f64>()
    });
    let d = cfg.displacement(&lat)?.norm();
    let de = delta_e_or_lattice(cfg, c.delta_e, &lat, flags.quiet)?;
    let mut table = Vec::with_capacity(times.len());
    for &t in &times {
        let cc = CoherenceConfig::new(mass, sigma, d, de, t)?;
        let k = coherence_elements(&cc);
        let neglect = coherence_neglect_h(&cc);
        let rel = if neglect == 0.0 {
            f64::NAN
        } else {
            ((k.sum - neglect) / neglect).abs()
        };
        table.push(vec![
            fmt_f64(t),
            fmt_f64(k.k1),
            fmt_f64(k.k2),
            fmt_f64(k.k3),
            fmt_f64(k.sum),
            fmt_f64(neglect),
            fmt_f64(rel),
            k.valid.to_string(),
        ]);
    }
    if !flags.quiet {
        eprintln!(
            "M = {mass:.3e} kg, σ = {sigma:.3e} m, d = {d:.3e} m, ΔE = {de:.3e} J, Mσ²/ħ = {:.3e} s",
            mass * sigma * sigma / HBAR
        );
    }
    write_table(
        output(cfg.out.path.as_deref())?,
        &["t_s", "k1", "k2", "k3", "sum", "neglect_h", "rel_diff", "short_time"],
        &table,
    )?;
    Ok(Outcome::Complete)
}

pub fn replot(from: &Path, out: Option<&Path>, quiet: bool) -> anyhow::Result<Outcome> {
    let file = File::open(from).with_context(|| format!("opening {}", from.display()))?;
    let rows = read_sweep(file).with_context(|| format!("reading {}", from.display()))?;
    write_sweep(output(out)?, &rows)?;
    if rows.iter().all(|r| r.tau.is_none()) {
        return Ok(Outcome::Complete);
    }
    Ok(report_crossing(&rows, quiet))
}
