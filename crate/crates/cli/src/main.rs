//! `quadmech <subcommand> --config <file> [--out <dir>] [--oracle]
//! [--nmech-scale <f>] [--workers <k>]`
//!
//! Exit codes: 0 success, 1 I/O failure, 2 configuration error, 3 numerical
//! precondition failure, 4 degenerate request.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use quadmech::convergence::{relative_drift, ConvergenceReport, DRIFT_TOL};

use commands::{Command, Ctx, Failure};
use config::{RunConfig, OUT_DIR_ENV};
use output::{publish, records, RunFlags, RunManifest};

#[derive(Debug, Parser)]
#[command(name = "quadmech", version, about = "Quadratically coupled optomechanics")]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// TOML run configuration, or a manifest.json from an earlier run.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides the environment and the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Recompute closed-system evolution numerically and add a fidelity column.
    #[arg(long)]
    oracle: bool,
    /// Rerun with n_mech scaled by this factor and record the drift.
    #[arg(long, value_name = "F")]
    nmech_scale: Option<f64>,
    /// Worker threads for sweeps.
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

fn execute(cli: &Cli) -> Result<std::path::PathBuf, Failure> {
    let started = Instant::now();
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path).map_err(Failure::Config)?,
        None => RunConfig::default(),
    };
    if cli.workers == 0 {
        return Err(Failure::Config("--workers must be at least 1".into()));
    }
    if let Some(f) = cli.nmech_scale {
        if !(f.is_finite() && f > 1.0) {
            return Err(Failure::Config(format!("--nmech-scale {f} must exceed 1")));
        }
    }
    let spec = cfg.hilbert.spec()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.workers)
        .build()
        .map_err(|e| Failure::Io(e.to_string()))?;
    let ctx = Ctx {
        cfg: &cfg,
        pool: &pool,
        oracle: cli.oracle,
    };

    let mut product = commands::run(cli.command, &ctx, &spec)?;
    let convergence = match cli.nmech_scale {
        Some(f) => {
            let bigger = spec.scale_mech(f)?;
            let scaled = commands::run(cli.command, &ctx, &bigger)?;
            let (drift, worst_index) = relative_drift(&product.observables, &scaled.observables)?;
            if drift >= DRIFT_TOL {
                product.notes.push(format!(
                    "truncation drift {drift:.3e} at n_mech {} -> {}",
                    spec.n_mech(),
                    bigger.n_mech()
                ));
            }
            Some(ConvergenceReport {
                n_mech: spec.n_mech(),
                n_mech_scaled: bigger.n_mech(),
                max_relative_drift: drift,
                worst_index,
                passed: drift < DRIFT_TOL,
            })
        }
        None => None,
    };

    let out_dir = cfg.out_dir(cli.out.as_deref(), std::env::var(OUT_DIR_ENV).ok().as_deref());
    let manifest = RunManifest {
        tool: "quadmech",
        version: env!("CARGO_PKG_VERSION"),
        subcommand: cli.command.name().into(),
        config: cfg.clone(),
        flags: RunFlags {
            oracle: cli.oracle,
            nmech_scale: cli.nmech_scale,
            workers: cli.workers,
        },
        outputs: records(&product.files),
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        convergence,
        checks: product.checks,
        notes: product.notes,
    };
    publish(&out_dir, &product.files, &manifest)
        .map_err(|e| Failure::Io(format!("{}: {e}", out_dir.display())))?;
    Ok(out_dir)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(dir) => {
            eprintln!("quadmech {}: wrote {}", cli.command.name(), dir.display());
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("quadmech {}: {}", cli.command.name(), f.message());
            ExitCode::from(f.exit_code())
        }
    }
}
