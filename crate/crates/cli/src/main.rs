//! `dpcollapse`: collapse-time sweeps, bound tables and self-checks.
//!
//! Exit status: 0 complete, 10 no τ_obs crossing, 2 configuration error,
//! 3 budget or cap refusal, 1 anything else (including a failed oracle check).

// `!(x > 0.0)` is the NaN-rejecting form.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod progress;
mod table;
mod units;

use clap::{Args, Parser, Subcommand};
use commands::{Outcome, RunFlags, ScalingPlan};
use config::{ConfigError, RunConfig};
use dpcollapse_core::Error as CoreError;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "dpcollapse", version, about = "Diósi-Penrose collapse times of finite crystals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set lattice.n1=1000`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Shorthand for `--set exec.workers=N`.
    #[arg(long)]
    workers: Option<usize>,
    /// Shorthand for `--set exec.allow_long=true`.
    #[arg(long)]
    allow_long: bool,
    /// Shorthand for `--set out.path=FILE`. Standard output otherwise.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// No progress or summaries on stderr.
    #[arg(long, short)]
    quiet: bool,
}

impl Common {
    fn load(&self) -> Result<RunConfig, ConfigError> {
        let mut overrides = self.set.clone();
        if let Some(w) = self.workers {
            overrides.push(format!("exec.workers={w}"));
        }
        if self.allow_long {
            overrides.push("exec.allow_long=true".into());
        }
        if let Some(p) = &self.out {
            let json = serde_json::to_string(&p.to_string_lossy()).expect("string serializes");
            overrides.push(format!("out.path={json}"));
        }
        RunConfig::load(self.config.as_deref(), &overrides)
    }

    fn flags(&self, timing: bool) -> RunFlags {
        RunFlags {
            quiet: self.quiet,
            timing,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// τ(R₀) over the configured log grid, one CSV row per point.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Fill the wall_ms column (makes the output run-dependent).
        #[arg(long)]
        timing: bool,
    },
    /// Compare the linear-scaling sum with the pairwise double sum.
    Oracle {
        #[command(flatten)]
        common: Common,
        /// Separations to check, as multiples of the longest side.
        #[arg(long, value_delimiter = ',', default_value = "2,4,8")]
        d_multiples: Vec<f64>,
    },
    /// Wall time against N for both summation paths.
    BenchScaling {
        #[command(flatten)]
        common: Common,
        /// Cells per side for the linear-scaling path.
        #[arg(long, value_delimiter = ',', default_value = "100,316,1000,3162")]
        sides: Vec<u64>,
        /// Cells per side for the pairwise path; empty to skip.
        #[arg(long, value_delimiter = ',', default_value = "10,18,32,56,100")]
        brute_sides: Vec<u64>,
        #[arg(long, default_value_t = 3)]
        repeats: usize,
    },
    /// Analytic ΔE brackets over the R₀ grid (read as R_eff), square lattices only.
    Bounds {
        #[command(flatten)]
        common: Common,
        /// Report the raw brackets without monotonicity refinement.
        #[arg(long)]
        no_refine: bool,
        /// Skip the numerical ΔE column.
        #[arg(long)]
        no_numerics: bool,
        #[arg(long)]
        timing: bool,
    },
    /// Colored-noise collapse times over the Ω_C grid.
    Colored {
        #[command(flatten)]
        common: Common,
    },
    /// Coherence elements with and without free spreading over a time grid.
    Coherence {
        #[command(flatten)]
        common: Common,
    },
    /// Re-read a sweep CSV and write it back out.
    Replot {
        #[arg(long, value_name = "FILE")]
        from_csv: PathBuf,
        #[arg(long, short)]
        out: Option<PathBuf>,
        #[arg(long, short)]
        quiet: bool,
    },
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    match cli.command {
        Command::Sweep { common, timing } => commands::sweep(&common.load()?, &common.flags(timing)),
        Command::Oracle {
            common,
            d_multiples,
        } => commands::oracle(&common.load()?, &common.flags(false), &d_multiples),
        Command::BenchScaling {
            common,
            sides,
            brute_sides,
            repeats,
        } => commands::bench_scaling(
            &common.load()?,
            &common.flags(true),
            &ScalingPlan {
                sides: &sides,
                brute_sides: &brute_sides,
                repeats,
            },
        ),
        Command::Bounds {
            common,
            no_refine,
            no_numerics,
            timing,
        } => commands::bounds(&common.load()?, &common.flags(timing), !no_refine, !no_numerics),
        Command::Colored { common } => commands::colored(&common.load()?, &common.flags(false)),
        Command::Coherence { common } => commands::coherence(&common.load()?, &common.flags(false)),
        Command::Replot {
            from_csv,
            out,
            quiet,
        } => commands::replot(&from_csv, out.as_deref(), quiet),
    }
}

fn exit_status(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<ConfigError>().is_some() {
        return 2;
    }
    match e.downcast_ref::<CoreError>() {
        Some(CoreError::BudgetExceeded { .. } | CoreError::BruteCapExceeded { .. }) => 3,
        Some(_) => 2,
        None => 1,
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(Outcome::Complete) => ExitCode::SUCCESS,
        Ok(Outcome::NoCrossing) => ExitCode::from(10),
        Ok(Outcome::CheckFailed) => {
            eprintln!("oracle check failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_status(&e))
        }
    }
}
