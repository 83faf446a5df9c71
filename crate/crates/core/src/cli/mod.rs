//! Command-line front end.
//!
//! ```text
//! radial-ks --config run.json [--out DIR] [--jobs K] [--seed S] simulate
//! radial-ks --config run.json threshold [--p-min 1.01 --p-max 16 --p-grid 64]
//! radial-ks --config run.json sweep --m-lo 4 --m-hi 16 --steps 6
//! radial-ks --config run.json sweep --masses 4,6,8,10,12,16
//! radial-ks --config run.json sweep --m-lo 4 --m-hi 16 --bisect [--steps 12]
//! ```
//!
//! Exit codes: 0 success or completed run, 2 configuration or I/O error,
//! 3 blow-up detected, 4 numerical failure.

mod config;
mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::{OutputFormat, Resolved, RunConfig};

use crate::analysis::{
    empirical_threshold, evaluate_criterion, optimize_p, sweep_masses, BISECTION_STEPS, P_GRID, P_MAX, P_MIN,
};
use crate::model::make_initial_data;
use crate::solver::{integrate, virial_trace, Outcome};
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_BLOWUP: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "radial-ks", version, about = "Radial Keller-Segel simulator and blow-up criterion toolkit")]
pub struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Recorded in the outputs; runs themselves are deterministic.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate one run and write its trajectory, virial trace and summary.
    Simulate,
    /// Evaluate the blow-up criterion and scan moment orders.
    Threshold {
        #[arg(long, default_value_t = P_MIN)]
        p_min: f64,
        #[arg(long, default_value_t = P_MAX)]
        p_max: f64,
        #[arg(long, default_value_t = P_GRID)]
        p_grid: usize,
    },
    /// Run a grid of masses, or bisect for the empirical threshold.
    Sweep {
        #[arg(long)]
        m_lo: Option<f64>,
        #[arg(long)]
        m_hi: Option<f64>,
        /// Grid intervals, or bisection steps with `--bisect`.
        #[arg(long)]
        steps: Option<usize>,
        /// Explicit mass list instead of an evenly spaced grid.
        #[arg(long, value_delimiter = ',', conflicts_with_all = ["m_lo", "m_hi", "bisect"])]
        masses: Option<Vec<f64>>,
        #[arg(long)]
        bisect: bool,
    },
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("radial-ks: {e}");
            match e {
                Error::Numerical(_) => EXIT_NUMERICAL,
                _ => EXIT_CONFIG,
            }
        }
    }
}

fn execute(cli: &Cli) -> Result<i32> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::config("--config <path> is required"))?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    let resolved = cfg.resolve()?;
    let pool = match cli.jobs {
        Some(0) => return Err(Error::config("--jobs must be >= 1")),
        Some(k) => Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| Error::config(format!("cannot start worker pool: {e}")))?,
        ),
        None => None,
    };
    let go = || match &cli.command {
        Command::Simulate => simulate(&cfg, &resolved, cli.seed),
        Command::Threshold { p_min, p_max, p_grid } => {
            threshold(&cfg, &resolved, cli.seed, (*p_min, *p_max), *p_grid)
        }
        Command::Sweep {
            m_lo,
            m_hi,
            steps,
            masses,
            bisect,
        } => sweep(&cfg, &resolved, cli.seed, *m_lo, *m_hi, *steps, masses.as_deref(), *bisect),
    };
    match pool {
        Some(pool) => pool.install(go),
        None => go(),
    }
}

fn simulate(cfg: &RunConfig, r: &Resolved, seed: Option<u64>) -> Result<i32> {
    let u0 = make_initial_data(r.shape, r.params.mass, r.params.n, r.grid.clone())?;
    let report = evaluate_criterion(&u0, &r.params)?;
    let traj = integrate(&u0, &r.params, &r.controls)?;
    let virial = if traj.samples.len() >= 3 {
        virial_trace(&traj, r.params.p)?
    } else {
        traj.samples.iter().map(|(_, v)| *v).collect()
    };
    let files = [
        output::trajectory(&traj, cfg.output_format),
        output::virial(&virial, cfg.output_format),
        ("summary.json", output::summary(&traj, &report, cfg, seed)?),
    ];
    output::write_all(&cfg.output_dir, &files)?;
    eprintln!(
        "radial-ks: simulate {} after {} steps, max u = {:e}",
        traj.outcome.label(),
        traj.steps,
        traj.max_u
    );
    Ok(match traj.outcome {
        Outcome::Completed { .. } => EXIT_OK,
        Outcome::BlowUp { .. } => EXIT_BLOWUP,
        Outcome::NumericalFailure { .. } => EXIT_NUMERICAL,
    })
}

fn threshold(cfg: &RunConfig, r: &Resolved, seed: Option<u64>, range: (f64, f64), size: usize) -> Result<i32> {
    let as_config = |e: Error| Error::config(e.to_string());
    let u0 = make_initial_data(r.shape, r.params.mass, r.params.n, r.grid.clone())?;
    let report = evaluate_criterion(&u0, &r.params)?;
    let scan = optimize_p(&u0, &r.params, range, size).map_err(as_config)?;
    let text = output::threshold(&report, &scan, cfg, seed)?;
    output::write_all(&cfg.output_dir, &[("threshold.json", text)])?;
    eprintln!(
        "radial-ks: criterion at p = {}: {}; feasible for some scanned p: {}",
        r.params.p, report.criterion_met, scan.any_feasible
    );
    Ok(EXIT_OK)
}

#[allow(clippy::too_many_arguments)]
fn sweep(
    cfg: &RunConfig,
    r: &Resolved,
    seed: Option<u64>,
    m_lo: Option<f64>,
    m_hi: Option<f64>,
    steps: Option<usize>,
    masses: Option<&[f64]>,
    bisect: bool,
) -> Result<i32> {
    let bracket = || match (m_lo, m_hi) {
        (Some(lo), Some(hi)) if lo > 0.0 && hi > lo && hi.is_finite() => Ok((lo, hi)),
        (Some(lo), Some(hi)) => Err(Error::config(format!("invalid mass bracket [{lo}, {hi}]"))),
        _ => Err(Error::config("sweep needs --m-lo and --m-hi, or --masses")),
    };
    if bisect {
        let bracket = bracket()?;
        let steps = steps.unwrap_or(BISECTION_STEPS);
        let found = empirical_threshold(r.shape, &r.params, &r.grid, bracket, &r.controls, steps).map_err(|e| match e {
            Error::Domain(msg) => Error::config(msg),
            other => other,
        })?;
        let text = output::bisect(&found, cfg, seed)?;
        output::write_all(&cfg.output_dir, &[("bisect.json", text)])?;
        eprintln!("radial-ks: empirical threshold M* = {}", found.m_star);
        return Ok(EXIT_OK);
    }
    let list = match masses {
        Some(list) => {
            if list.is_empty() || list.iter().any(|&m| !(m > 0.0 && m.is_finite())) {
                return Err(Error::config("--masses must be a list of positive values"));
            }
            list.to_vec()
        }
        None => {
            let (lo, hi) = bracket()?;
            let steps = steps.unwrap_or(1).max(1);
            (0..=steps)
                .map(|k| if k == steps { hi } else { lo + (hi - lo) * k as f64 / steps as f64 })
                .collect()
        }
    };
    let runs = sweep_masses(r.shape, &r.params, &r.grid, &list, &r.controls)?;
    output::write_all(&cfg.output_dir, &[("sweep.csv", output::sweep(&runs))])?;
    eprintln!("radial-ks: sweep of {} masses written", runs.len());
    Ok(EXIT_OK)
}
