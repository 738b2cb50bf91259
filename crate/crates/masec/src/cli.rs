//! Command-line front end. Exit codes: 0 success, 1 usage or I/O error,
//! 2 infeasible scenario, 3 gradient audit failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use masec_core::harness::{
    gradient_audit, run_one_dim_search, run_optimize, run_sweep, ScenarioConfig, SweepVar,
    SWEEP_METHODS,
};
use serde::Serialize;

use crate::{config, io};

#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error("{0:#}")]
    Usage(anyhow::Error),
    #[error("{0:#}")]
    Infeasible(anyhow::Error),
    #[error("{0}")]
    Audit(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Infeasible(_) => 2,
            Failure::Audit(_) => 3,
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Usage(e)
    }
}

fn core_failure(e: masec_core::Error) -> Failure {
    use masec_core::Error as E;
    match e {
        E::InfeasibleScenario(_) | E::InfeasibleRegion { .. } | E::InvalidLayout(_) => {
            Failure::Infeasible(e.into())
        }
        _ => Failure::Usage(e.into()),
    }
}

#[derive(Debug, Parser)]
#[command(name = "masec", version, about = "Movable-antenna secrecy-rate simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML file with scenario and optimizer parameters.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Random seed; overrides the config file's `seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Parameter override `key=value`, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run SA-PGA once and write the iteration trace and final solution.
    Optimize {
        #[command(flatten)]
        common: Common,
        /// Never accept a worse candidate.
        #[arg(long)]
        greedy: bool,
    },
    /// Compare analytic gradients with finite differences.
    CheckGrad {
        #[command(flatten)]
        common: Common,
        /// Random instances to audit.
        #[arg(long, default_value_t = 100)]
        instances: usize,
        /// Maximum relative error for both gradients; defaults to 1e-4 for
        /// the beamformer and 1e-3 for positions.
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Mean secrecy of every array over a parameter grid.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// paths, alpha, noise or distance.
        #[arg(long)]
        var: String,
        /// Comma-separated values or an inclusive `start:stop:step` range.
        #[arg(long)]
        grid: String,
        /// Replicates per grid point.
        #[arg(long, default_value_t = 200)]
        reps: usize,
        /// Run SA-PGA without Metropolis acceptance of worse candidates.
        #[arg(long)]
        greedy: bool,
    },
    /// One-dimensional position search on a six-element linear array.
    Onedsearch {
        #[command(flatten)]
        common: Common,
    },
}

/// Values from `a,b,c` or the inclusive range `start:stop:step`. Range
/// points are rounded to 12 decimals so `2.0:3.5:0.1` yields `2.3`, not
/// `2.3000000000000003`.
pub fn parse_grid(text: &str) -> anyhow::Result<Vec<f64>> {
    let text = text.trim();
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        let [start, stop, step] = parts[..] else {
            return Err(anyhow!("range {text:?} must be start:stop:step"));
        };
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .with_context(|| format!("bad number {s:?} in range {text:?}"))
        };
        let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
        if !(step > 0.0 && stop >= start && start.is_finite() && stop.is_finite()) {
            return Err(anyhow!("range {text:?} needs step > 0 and stop >= start"));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        return Ok((0..count)
            .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
            .collect());
    }
    let values = text
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .with_context(|| format!("bad grid value {s:?}"))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    if values.is_empty() {
        return Err(anyhow!("grid is empty"));
    }
    Ok(values)
}

fn load_config(common: &Common) -> Result<ScenarioConfig, Failure> {
    let mut cfg = config::load(common.config.as_deref(), &common.overrides)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    cfg.validate().map_err(core_failure)?;
    Ok(cfg)
}

fn prepare_out(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))
}

#[derive(Serialize)]
struct Summary {
    seed: u64,
    array: String,
    iterations: usize,
    accepted: usize,
    initial_secrecy: f64,
    secrecy: f64,
    margin: f64,
    bob_rate: f64,
    eve_rate: f64,
    worst_user: usize,
    worst_eve_position: usize,
    power: f64,
    positions: Vec<[f64; 3]>,
    /// Beamformer columns, one per user, as `[re, im]` per antenna.
    beamformer: Vec<Vec<[f64; 2]>>,
}

fn cmd_optimize(common: &Common, greedy: bool) -> Result<(), Failure> {
    let mut cfg = load_config(common)?;
    cfg.greedy |= greedy;
    let (scenario, result) = run_optimize(&cfg).map_err(core_failure)?;
    prepare_out(&common.out)?;
    io::write_file(&common.out.join("trace.csv"), |w| io::write_trace(&result.trace, w))?;
    let best = &result.best;
    let summary = Summary {
        seed: cfg.seed,
        array: cfg.array_kind.label().to_string(),
        iterations: result.trace.len(),
        accepted: result.trace.iter().filter(|r| r.accepted).count(),
        initial_secrecy: scenario.initial.secrecy,
        secrecy: best.secrecy,
        margin: best.margin,
        bob_rate: best.bob_rate,
        eve_rate: best.eve_rate,
        worst_user: best.worst_k,
        worst_eve_position: best.best_m,
        power: best.beamformer.power(),
        positions: best.layout.positions.iter().map(|p| p.to_array()).collect(),
        beamformer: best
            .beamformer
            .columns()
            .map(|col| col.iter().map(|z| [z.re, z.im]).collect())
            .collect(),
    };
    let text = toml::to_string(&summary).context("serializing summary")?;
    io::write_file(&common.out.join("summary.toml"), |w| {
        std::io::Write::write_all(w, text.as_bytes())?;
        Ok(())
    })?;
    let cfg_text = config::to_toml(&cfg)?;
    io::write_file(&common.out.join("config.toml"), |w| {
        std::io::Write::write_all(w, cfg_text.as_bytes())?;
        Ok(())
    })?;
    println!(
        "{} seed {}: secrecy {:.6} bits/s/Hz (initial {:.6}), {} of {} iterations accepted",
        summary.array,
        cfg.seed,
        summary.secrecy,
        summary.initial_secrecy,
        summary.accepted,
        summary.iterations
    );
    Ok(())
}

fn cmd_check_grad(common: &Common, instances: usize, tolerance: Option<f64>) -> Result<(), Failure> {
    let cfg = load_config(common)?;
    if instances == 0 {
        return Err(Failure::Usage(anyhow!("--instances must be at least 1")));
    }
    let audit = gradient_audit(&cfg, instances, cfg.seed).map_err(core_failure)?;
    let (tol_w, tol_t) = tolerance.map_or((1e-4, 1e-3), |t| (t, t));
    println!(
        "instances {}: grad_w max relative error {:.3e} (tolerance {:.1e}), grad_t max relative error {:.3e} (tolerance {:.1e})",
        audit.instances, audit.max_err_w, tol_w, audit.max_err_t, tol_t
    );
    if audit.max_err_w < tol_w && audit.max_err_t < tol_t {
        Ok(())
    } else {
        Err(Failure::Audit("gradient audit exceeded tolerance".to_string()))
    }
}

fn cmd_sweep(common: &Common, var: &str, grid: &str, reps: usize, greedy: bool) -> Result<(), Failure> {
    let mut cfg = load_config(common)?;
    cfg.greedy |= greedy;
    let var: SweepVar = var.parse().map_err(core_failure)?;
    let grid = parse_grid(grid)?;
    if reps == 0 {
        return Err(Failure::Usage(anyhow!("--reps must be at least 1")));
    }
    let results = run_sweep(var, &grid, reps, &SWEEP_METHODS, &cfg, cfg.seed, |done, total| {
        eprintln!("{}: grid point {done}/{total}", var.name());
    })
    .map_err(core_failure)?;
    prepare_out(&common.out)?;
    let path = common.out.join(format!("sweep_{}.csv", var.name()));
    io::write_file(&path, |w| io::write_sweep(&results, w))?;
    println!("wrote {} rows to {}", results.len(), path.display());
    Ok(())
}

fn cmd_onedsearch(common: &Common) -> Result<(), Failure> {
    let cfg = load_config(common)?;
    let table = run_one_dim_search(&cfg).map_err(core_failure)?;
    prepare_out(&common.out)?;
    let path = common.out.join("onedsearch.csv");
    io::write_file(&path, |w| io::write_search(&table, w))?;
    println!(
        "baseline secrecy {:.6}; wrote {} rows to {}",
        table.baseline_secrecy,
        table.rows.len(),
        path.display()
    );
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Optimize { common, greedy } => cmd_optimize(common, *greedy),
        Command::CheckGrad {
            common,
            instances,
            tolerance,
        } => cmd_check_grad(common, *instances, *tolerance),
        Command::Sweep {
            common,
            var,
            grid,
            reps,
            greedy,
        } => cmd_sweep(common, var, grid, *reps, *greedy),
        Command::Onedsearch { common } => cmd_onedsearch(common),
    }
}

/// Parse `args`, run, and map the outcome to a process exit code.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_lists_and_ranges() {
        assert_eq!(parse_grid("1,2,3,4").unwrap(), vec![1.0, 2.0, 3.0, 4.0]);
        let g = parse_grid("2.0:3.5:0.1").unwrap();
        assert_eq!(g.len(), 16);
        assert_eq!(g[3], 2.3);
        assert_eq!(g[15], 3.5);
        assert_eq!(parse_grid("0.5:0.5:1").unwrap(), vec![0.5]);
        assert_eq!(parse_grid("1e-4, 3e-4").unwrap(), vec![1e-4, 3e-4]);
    }

    #[test]
    fn bad_grids_are_errors() {
        for bad in ["", "1,,2", "1:2", "3:1:0.5", "1:2:0", "a:b:c"] {
            assert!(parse_grid(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn core_errors_map_to_exit_codes() {
        let inf = core_failure(masec_core::Error::InfeasibleScenario("x".into()));
        assert_eq!(inf.exit_code(), 2);
        let cfg = core_failure(masec_core::Error::InvalidConfig("x".into()));
        assert_eq!(cfg.exit_code(), 1);
        assert_eq!(Failure::Audit("x".into()).exit_code(), 3);
    }
}
