use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::config::{OutputFormat, RunConfig};
use crate::analysis::{EmpiricalThreshold, PScan, ThresholdReport};
use crate::functionals::VirialSample;
use crate::solver::{BlowUpReason, Outcome, Trajectory};
use crate::Result;

/// 17 significant digits.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn json(value: &impl Serialize) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Creates `dir` and writes every file; nothing is written before this call.
pub fn write_all(dir: &Path, files: &[(&str, String)]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, body) in files {
        std::fs::write(dir.join(name), body)?;
    }
    Ok(())
}

pub fn trajectory(traj: &Trajectory, format: OutputFormat) -> (&'static str, String) {
    match format {
        OutputFormat::Csv => {
            let mut s = String::from("t,r-index,r,U,u\n");
            for state in traj.states() {
                let t = num(state.t);
                for (k, ((r, big_u), u)) in state
                    .grid()
                    .nodes()
                    .iter()
                    .zip(state.mass_fn())
                    .zip(state.density())
                    .enumerate()
                {
                    let _ = writeln!(s, "{t},{k},{},{},{}", num(*r), num(*big_u), num(*u));
                }
            }
            ("trajectory.csv", s)
        }
        OutputFormat::Json => {
            #[derive(Serialize)]
            struct Snapshot<'a> {
                t: f64,
                #[serde(rename = "U")]
                mass_fn: &'a [f64],
                u: &'a [f64],
            }
            #[derive(Serialize)]
            struct Series<'a> {
                r: &'a [f64],
                samples: Vec<Snapshot<'a>>,
            }
            let series = Series {
                r: traj.final_state().grid().nodes(),
                samples: traj
                    .states()
                    .map(|s| Snapshot {
                        t: s.t,
                        mass_fn: s.mass_fn(),
                        u: s.density(),
                    })
                    .collect(),
            };
            ("trajectory.json", json(&series).expect("plain data serializes"))
        }
    }
}

pub fn virial(samples: &[VirialSample], format: OutputFormat) -> (&'static str, String) {
    match format {
        OutputFormat::Csv => {
            let mut s = String::from("t,m_p,R_p,rhs_identity,rhs_inequality,dmdt_fd\n");
            for v in samples {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{}",
                    num(v.t),
                    num(v.m_p),
                    num(v.r_p),
                    num(v.rhs_identity),
                    num(v.rhs_inequality),
                    opt(v.dmdt_fd)
                );
            }
            ("virial.csv", s)
        }
        OutputFormat::Json => ("virial.json", json(&samples).expect("plain data serializes")),
    }
}

#[derive(Serialize)]
struct Summary<'a> {
    outcome: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    t_end: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    t_star: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    reason: Option<BlowUpReason>,
    #[serde(skip_serializing_if = "Option::is_none")]
    failure_t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    description: Option<&'a str>,
    max_u: f64,
    repairs: usize,
    steps: usize,
    samples: usize,
    criterion: &'a ThresholdReport,
    seed: Option<u64>,
    config: &'a RunConfig,
}

pub fn summary(traj: &Trajectory, report: &ThresholdReport, cfg: &RunConfig, seed: Option<u64>) -> Result<String> {
    let mut s = Summary {
        outcome: traj.outcome.label(),
        t_end: None,
        t_star: None,
        reason: None,
        failure_t: None,
        description: None,
        max_u: traj.max_u,
        repairs: traj.repairs,
        steps: traj.steps,
        samples: traj.samples.len(),
        criterion: report,
        seed,
        config: cfg,
    };
    match &traj.outcome {
        Outcome::Completed { t_end } => s.t_end = Some(*t_end),
        Outcome::BlowUp { t_star, reason } => {
            s.t_star = Some(*t_star);
            s.reason = Some(*reason);
        }
        Outcome::NumericalFailure { t, description } => {
            s.failure_t = Some(*t);
            s.description = Some(description);
        }
    }
    json(&s)
}

#[derive(Serialize)]
struct Threshold<'a> {
    report: &'a ThresholdReport,
    optimizer: &'a PScan,
    seed: Option<u64>,
    config: &'a RunConfig,
}

pub fn threshold(report: &ThresholdReport, scan: &PScan, cfg: &RunConfig, seed: Option<u64>) -> Result<String> {
    json(&Threshold {
        report,
        optimizer: scan,
        seed,
        config: cfg,
    })
}

#[derive(Serialize)]
struct Bisect<'a> {
    #[serde(flatten)]
    found: &'a EmpiricalThreshold,
    seed: Option<u64>,
    config: &'a RunConfig,
}

pub fn bisect(found: &EmpiricalThreshold, cfg: &RunConfig, seed: Option<u64>) -> Result<String> {
    json(&Bisect {
        found,
        seed,
        config: cfg,
    })
}

pub fn sweep(runs: &[(Trajectory, ThresholdReport)]) -> String {
    let mut s = String::from("M,outcome,t_star,max_u,criterion_met,time_bound\n");
    for (traj, report) in runs {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            num(traj.params.mass),
            traj.outcome.label(),
            opt(traj.outcome.t_star()),
            num(traj.max_u),
            report.criterion_met,
            opt(report.time_bound)
        );
    }
    s
}
