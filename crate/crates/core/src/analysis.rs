//! Blow-up criterion, critical masses, the comparison-ODE time bound and
//! threshold searches over the mean mass.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::functionals::{kappa, moment_of_state, EnergyTerms};
use crate::model::{critical_alpha, make_initial_data, InitialShape, Params, RadialGrid, RadialState};
use crate::quadrature::adaptive_simpson;
use crate::solver::{integrate, Outcome, SolverControls, Trajectory};
use crate::{Error, Result};

/// Lower end of the default moment-order scan.
pub const P_MIN: f64 = 1.01;
/// Upper end of the default moment-order scan.
pub const P_MAX: f64 = 16.0;
/// Number of points in the default moment-order scan.
pub const P_GRID: usize = 64;
/// Default number of bisection steps for threshold searches.
pub const BISECTION_STEPS: usize = 12;

/// Outcome of evaluating the blow-up criterion for one initial datum and one `p`.
#[derive(Debug, Clone, Serialize)]
pub struct ThresholdReport {
    pub params: Params,
    /// `m̄_p(u0)`.
    pub mbar: f64,
    #[serde(rename = "E_at_mbar")]
    pub energy_at_mbar: f64,
    /// `E_{M,p}(m̄_p(u0)) < 0`.
    pub criterion_met: bool,
    pub p_used: f64,
    pub p_optimal: Option<f64>,
    /// Least `M` with `E_{M,p}(0) = 0`; only for a critical certificate.
    #[serde(rename = "M_critical_zero")]
    pub m_critical_zero: Option<f64>,
    pub time_bound: Option<f64>,
}

/// Criterion reports across a scan of moment orders.
#[derive(Debug, Clone, Serialize)]
pub struct PScan {
    pub p_optimal: f64,
    /// Report at `p_optimal`, with `p_optimal` filled in.
    pub report: ThresholdReport,
    pub all_feasible: bool,
    pub any_feasible: bool,
    pub scan: Vec<ThresholdReport>,
}

/// Evaluates `E_{M,p}(m̄_p(u0)) < 0` and, when it holds, the time bound.
pub fn evaluate_criterion(u0: &RadialState, params: &Params) -> Result<ThresholdReport> {
    if u0.dim() != params.n || u0.mass() != params.mass {
        return Err(Error::domain(format!(
            "state (n={}, M={}) does not match parameters (n={}, M={})",
            u0.dim(),
            u0.mass(),
            params.n,
            params.mass
        )));
    }
    let mbar = moment_of_state(u0, params.p)?;
    let terms = EnergyTerms::new(params)?;
    let energy_at_mbar = terms.eval(mbar);
    let criterion_met = energy_at_mbar < 0.0;
    let time_bound = if criterion_met {
        Some(hitting_time(|z| terms.eval(z), mbar)?)
    } else {
        None
    };
    Ok(ThresholdReport {
        params: *params,
        mbar,
        energy_at_mbar,
        criterion_met,
        p_used: params.p,
        p_optimal: None,
        m_critical_zero: critical_mass_of(params)?,
        time_bound,
    })
}

/// `n (c1 p (p+1) κ_p((n-2)/n))^{n/2}`.
pub fn critical_mass_zero(p: f64, n: usize, c1: f64) -> Result<f64> {
    if !(c1 > 0.0 && c1.is_finite()) {
        return Err(Error::domain(format!("c1 must be positive, got {c1}")));
    }
    let nf = n as f64;
    let k = kappa(p, critical_alpha(n), n)?;
    Ok(nf * (c1 * p * (p + 1.0) * k).powf(nf / 2.0))
}

/// Critical mass for a critical certificate. In two dimensions both terms of
/// `E` are constant in `z`, so their coefficients add.
fn critical_mass_of(params: &Params) -> Result<Option<f64>> {
    if !params.is_critical() {
        return Ok(None);
    }
    let cert = params.diffusion.certificate;
    let c = if params.n == 2 { cert.c1 + cert.c2 } else { cert.c1 };
    if c == 0.0 {
        return Ok(None);
    }
    critical_mass_zero(params.p, params.n, c).map(Some)
}

/// The default scan: `p - 1` log-spaced over `[P_MIN - 1, P_MAX - 1]`.
pub fn default_p_grid() -> Vec<f64> {
    p_grid((P_MIN, P_MAX), P_GRID).expect("default range is valid")
}

/// `size` values with `p - 1` log-spaced between the ends of `range`.
pub fn p_grid(range: (f64, f64), size: usize) -> Result<Vec<f64>> {
    let (lo, hi) = range;
    if !(lo > 1.0 && hi >= lo && hi.is_finite()) || size == 0 {
        return Err(Error::domain(format!(
            "moment-order range must satisfy 1 < lo <= hi < inf with a nonempty grid, got [{lo}, {hi}] x {size}"
        )));
    }
    if size == 1 {
        return Ok(vec![lo]);
    }
    let (a, b) = ((lo - 1.0).ln(), (hi - 1.0).ln());
    Ok((0..size)
        .map(|k| {
            if k == 0 {
                lo
            } else if k == size - 1 {
                hi
            } else {
                1.0 + (a + (b - a) * k as f64 / (size - 1) as f64).exp()
            }
        })
        .collect())
}

/// Scans moment orders and picks the one minimising `E_{M,p}(m̄_p) / (M/n)^{p+1}`.
pub fn optimize_p(u0: &RadialState, params: &Params, range: (f64, f64), size: usize) -> Result<PScan> {
    let ps = p_grid(range, size)?;
    let scan = ps
        .iter()
        .map(|&p| evaluate_criterion(u0, &params.with_p(p)?))
        .collect::<Result<Vec<_>>>()?;
    let score = |r: &ThresholdReport| r.energy_at_mbar / r.params.mass_per_dim().powf(r.p_used + 1.0);
    let best = scan
        .iter()
        .enumerate()
        .min_by(|a, b| score(a.1).total_cmp(&score(b.1)))
        .map(|(k, _)| k)
        .unwrap();
    let mut report = scan[best].clone();
    report.p_optimal = Some(report.p_used);
    Ok(PScan {
        p_optimal: report.p_used,
        report,
        all_feasible: scan.iter().all(|r| r.criterion_met),
        any_feasible: scan.iter().any(|r| r.criterion_met),
        scan,
    })
}

/// Time at which the solution of `m' = E_{M,p}(m)`, `m(0) = m0`, reaches zero.
pub fn blowup_time_bound(m0: f64, params: &Params) -> Result<f64> {
    if !(m0 >= 0.0 && m0.is_finite()) {
        return Err(Error::domain(format!("initial moment must be finite and >= 0, got {m0}")));
    }
    let terms = EnergyTerms::new(params)?;
    hitting_time(|z| terms.eval(z), m0)
}

/// `∫_0^{m0} dz / (-E(z))` for an increasing `E` with `E(m0) < 0`.
pub fn hitting_time(energy: impl Fn(f64) -> f64, m0: f64) -> Result<f64> {
    let e0 = energy(m0);
    if !(e0 < 0.0) {
        return Err(Error::domain(format!(
            "time bound needs E(m0) < 0, got E({m0}) = {e0}"
        )));
    }
    if m0 == 0.0 {
        return Ok(0.0);
    }
    adaptive_simpson(|z| -1.0 / energy(z), 0.0, m0, 1e-8 * m0 / e0.abs())
}

/// Solver outcome for one mass in a threshold search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MassRun {
    #[serde(rename = "M")]
    pub mass: f64,
    pub outcome: Outcome,
    pub max_u: f64,
}

impl MassRun {
    fn of(traj: &Trajectory) -> Self {
        MassRun {
            mass: traj.params.mass,
            outcome: traj.outcome.clone(),
            max_u: traj.max_u,
        }
    }
}

/// Result of bisecting on the mean mass.
#[derive(Debug, Clone, Serialize)]
pub struct EmpiricalThreshold {
    #[serde(rename = "M_star_empirical")]
    pub m_star: f64,
    #[serde(rename = "M_lo")]
    pub lo: f64,
    #[serde(rename = "M_hi")]
    pub hi: f64,
    /// Every run in the order performed.
    pub runs: Vec<MassRun>,
    /// True when every blow-up in `runs` occurs at a larger mass than every completion.
    pub monotone: bool,
}

/// Builds `shape` at mass `params.mass` and integrates it.
pub fn run_mass(
    shape: InitialShape,
    params: &Params,
    grid: &Arc<RadialGrid>,
    controls: &SolverControls,
) -> Result<Trajectory> {
    let u0 = make_initial_data(shape, params.mass, params.n, grid.clone())?;
    integrate(&u0, params, controls)
}

/// Bisects on `M` between a completing run at `m_lo` and a blow-up at `m_hi`.
pub fn empirical_threshold(
    shape: InitialShape,
    template: &Params,
    grid: &Arc<RadialGrid>,
    (m_lo, m_hi): (f64, f64),
    controls: &SolverControls,
    steps: usize,
) -> Result<EmpiricalThreshold> {
    check_bracket(m_lo, m_hi)?;
    let run = |mass: f64| -> Result<MassRun> {
        let traj = run_mass(shape, &template.with_mass(mass)?, grid, controls)?;
        match traj.outcome {
            Outcome::NumericalFailure { t, ref description } => Err(Error::Numerical(format!(
                "run at M = {mass} failed at t = {t}: {description}"
            ))),
            _ => Ok(MassRun::of(&traj)),
        }
    };
    let (lo_run, hi_run) = rayon::join(|| run(m_lo), || run(m_hi));
    let (lo_run, hi_run) = (lo_run?, hi_run?);
    if !lo_run.outcome.is_completed() || !hi_run.outcome.is_blowup() {
        return Err(Error::domain(format!(
            "bracket [{m_lo}, {m_hi}] must complete at the low end and blow up at the high end, got {} and {}",
            lo_run.outcome.label(),
            hi_run.outcome.label()
        )));
    }
    let mut runs = vec![lo_run, hi_run];
    let (mut lo, mut hi) = (m_lo, m_hi);
    for _ in 0..steps {
        let mid = 0.5 * (lo + hi);
        let r = run(mid)?;
        if r.outcome.is_blowup() {
            hi = mid;
        } else {
            lo = mid;
        }
        runs.push(r);
    }
    let monotone = is_monotone(&runs);
    Ok(EmpiricalThreshold {
        m_star: 0.5 * (lo + hi),
        lo,
        hi,
        runs,
        monotone,
    })
}

/// Least mass in `[m_lo, m_hi]` (to bisection accuracy) at which some scanned
/// `p` meets the criterion for `shape`.
pub fn theoretical_threshold(
    shape: InitialShape,
    template: &Params,
    grid: &Arc<RadialGrid>,
    (m_lo, m_hi): (f64, f64),
    ps: &[f64],
    steps: usize,
) -> Result<f64> {
    check_bracket(m_lo, m_hi)?;
    let feasible = |mass: f64| -> Result<bool> {
        let params = template.with_mass(mass)?;
        let u0 = make_initial_data(shape, mass, params.n, grid.clone())?;
        for &p in ps {
            if evaluate_criterion(&u0, &params.with_p(p)?)?.criterion_met {
                return Ok(true);
            }
        }
        Ok(false)
    };
    if feasible(m_lo)? || !feasible(m_hi)? {
        return Err(Error::domain(format!(
            "criterion must fail at M = {m_lo} and hold at M = {m_hi}"
        )));
    }
    let (mut lo, mut hi) = (m_lo, m_hi);
    for _ in 0..steps {
        let mid = 0.5 * (lo + hi);
        if feasible(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Runs every mass independently on the rayon pool; results keep input order.
pub fn sweep_masses(
    shape: InitialShape,
    template: &Params,
    grid: &Arc<RadialGrid>,
    masses: &[f64],
    controls: &SolverControls,
) -> Result<Vec<(Trajectory, ThresholdReport)>> {
    masses
        .par_iter()
        .map(|&mass| {
            let params = template.with_mass(mass)?;
            let u0 = make_initial_data(shape, mass, params.n, grid.clone())?;
            let report = evaluate_criterion(&u0, &params)?;
            let traj = integrate(&u0, &params, controls)?;
            Ok((traj, report))
        })
        .collect()
}

fn check_bracket(m_lo: f64, m_hi: f64) -> Result<()> {
    if !(m_lo > 0.0 && m_hi > m_lo && m_hi.is_finite()) {
        return Err(Error::domain(format!("invalid mass bracket [{m_lo}, {m_hi}]")));
    }
    Ok(())
}

fn is_monotone(runs: &[MassRun]) -> bool {
    let max_done = runs
        .iter()
        .filter(|r| !r.outcome.is_blowup())
        .map(|r| r.mass)
        .fold(f64::NEG_INFINITY, f64::max);
    let min_blow = runs
        .iter()
        .filter(|r| r.outcome.is_blowup())
        .map(|r| r.mass)
        .fold(f64::INFINITY, f64::min);
    max_done < min_blow
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DiffusionLaw;

    fn linear_2d(mass: f64, p: f64) -> Params {
        Params::new(2, mass, DiffusionLaw::constant(), p).unwrap()
    }

    fn bump(mass: f64, delta: f64, j: usize) -> RadialState {
        let g = Arc::new(RadialGrid::uniform(j).unwrap());
        make_initial_data(InitialShape::ConcentratedBump { delta }, mass, 2, g).unwrap()
    }

    #[test]
    fn two_dimensional_critical_mass() {
        assert!((critical_mass_zero(2.0, 2, 1.0).unwrap() - 12.0).abs() < 1e-12);
        assert!((critical_mass_zero(1.0 + 1e-9, 2, 1.0).unwrap() - 8.0).abs() < 1e-7);
        assert!(critical_mass_zero(1.0, 2, 1.0).is_ok());
        assert!(critical_mass_zero(2.0, 2, 0.0).is_err());
    }

    #[test]
    fn three_dimensional_critical_mass() {
        let k = 9.0 / 28.0 * 4f64.powf(4.0 / 3.0);
        let expect = 3.0 * (6.0 * k).powf(1.5);
        let got = critical_mass_zero(2.0, 3, 1.0).unwrap();
        assert!((got - expect).abs() < 1e-10 * expect);
        assert!((got - 128.6).abs() < 0.1, "{got}");
    }

    #[test]
    fn critical_zero_reported_for_critical_laws() {
        let u0 = bump(10.0, 0.1, 256);
        let r = evaluate_criterion(&u0, &linear_2d(10.0, 2.0)).unwrap();
        assert!((r.m_critical_zero.unwrap() - 12.0).abs() < 1e-12);
        let law = DiffusionLaw::power_law(1.0, 0.0, 0.0).unwrap();
        let r = evaluate_criterion(&u0, &Params::new(2, 10.0, law, 2.0).unwrap()).unwrap();
        assert!((r.m_critical_zero.unwrap() - 12.0).abs() < 1e-12);
    }

    #[test]
    fn criterion_flips_with_mass() {
        let r = evaluate_criterion(&bump(16.0, 0.05, 512), &linear_2d(16.0, 2.0)).unwrap();
        assert!(r.criterion_met);
        assert!(r.energy_at_mbar < 0.0);
        assert!(r.time_bound.unwrap() > 0.0);
        let r = evaluate_criterion(&bump(8.0, 0.05, 512), &linear_2d(8.0, 2.0)).unwrap();
        assert!(!r.criterion_met);
        assert!(r.time_bound.is_none());
    }

    #[test]
    fn optimizer_picks_low_p_near_threshold() {
        let u0 = bump(10.0, 0.01, 1024);
        let s = optimize_p(&u0, &linear_2d(10.0, 2.0), (P_MIN, P_MAX), P_GRID).unwrap();
        assert!(s.any_feasible && !s.all_feasible);
        assert!(s.p_optimal > 1.0 && s.p_optimal < 1.5, "{}", s.p_optimal);
        assert!(s.report.criterion_met);
        for r in &s.scan {
            if r.criterion_met {
                assert!(r.p_used < 1.5);
            }
        }
    }

    #[test]
    fn optimizer_flags_infeasible_and_all_feasible() {
        let s = optimize_p(&bump(8.0, 0.01, 512), &linear_2d(8.0, 2.0), (P_MIN, P_MAX), P_GRID).unwrap();
        assert!(!s.any_feasible);
        let s = optimize_p(&bump(1e3, 0.01, 512), &linear_2d(1e3, 2.0), (P_MIN, P_MAX), P_GRID).unwrap();
        assert!(s.all_feasible);
        assert!(optimize_p(&bump(8.0, 0.01, 64), &linear_2d(8.0, 2.0), (2.0, 1.5), 8).is_err());
    }

    #[test]
    fn p_grid_ends() {
        let g = default_p_grid();
        assert_eq!(g.len(), P_GRID);
        assert_eq!(g[0], P_MIN);
        assert_eq!(*g.last().unwrap(), P_MAX);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn constant_energy_hitting_time() {
        let t = hitting_time(|_| -4.0, 2.0).unwrap();
        assert!((t - 0.5).abs() < 1e-12);
        assert_eq!(hitting_time(|_| -1.0, 0.0).unwrap(), 0.0);
        assert!(hitting_time(|_| 1.0, 1.0).is_err());
    }

    #[test]
    fn time_bound_requires_negative_energy() {
        assert!(blowup_time_bound(0.1, &linear_2d(8.0, 2.0)).is_err());
        assert_eq!(blowup_time_bound(0.0, &linear_2d(16.0, 2.0)).unwrap(), 0.0);
    }

    #[test]
    fn bisection_rejects_bad_bracket() {
        let g = Arc::new(RadialGrid::uniform(64).unwrap());
        let c = SolverControls::default();
        let shape = InitialShape::ConcentratedBump { delta: 0.1 };
        let t = linear_2d(4.0, 2.0);
        assert!(empirical_threshold(shape, &t, &g, (4.0, 2.0), &c, 2).is_err());
        let short = SolverControls { t_end: 1e-3, ..c };
        assert!(empirical_threshold(shape, &t, &g, (1.0, 2.0), &short, 2).is_err());
    }

    #[test]
    fn monotone_audit() {
        let done = |m| MassRun { mass: m, outcome: Outcome::Completed { t_end: 1.0 }, max_u: 1.0 };
        let blow = |m| MassRun {
            mass: m,
            outcome: Outcome::BlowUp { t_star: 0.1, reason: crate::solver::BlowUpReason::UCap },
            max_u: 1e9,
        };
        assert!(is_monotone(&[done(1.0), blow(3.0), done(2.0)]));
        assert!(!is_monotone(&[done(1.0), blow(2.0), done(3.0)]));
    }
}
