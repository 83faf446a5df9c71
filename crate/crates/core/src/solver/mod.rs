//! Time integration of `∂t U = r^{n-1} ∂r A(u) + u U - (M/n) r^n u` with
//! `U(t,0) = 0`, `U(t,1) = M/n`, and finite-time blow-up detection.

mod isotonic;
mod scheme;
mod tridiag;

use serde::{Deserialize, Serialize};

pub use scheme::Scheme;
use scheme::Stepper;

use crate::functionals::{EnergyTerms, VirialSample};
use crate::model::{Geometry, Params, RadialState};
use crate::{Error, Result};

/// Consecutive repaired steps after which a run is abandoned.
pub const MAX_CONSECUTIVE_REPAIRS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverControls {
    pub dt_init: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub cfl: f64,
    pub t_end: f64,
    /// Density at which blow-up is declared.
    pub u_cap: f64,
    /// Record every `sample_every`-th accepted step.
    pub sample_every: usize,
    pub scheme: Scheme,
}

impl Default for SolverControls {
    fn default() -> Self {
        SolverControls {
            dt_init: 1e-6,
            dt_min: 1e-12,
            dt_max: 1e-2,
            cfl: 0.4,
            t_end: 1.0,
            u_cap: 1e8,
            sample_every: 10,
            scheme: Scheme::SemiImplicitDiffusion,
        }
    }
}

impl SolverControls {
    pub fn validate(&self) -> Result<()> {
        let ok = self.dt_min > 0.0
            && self.dt_min <= self.dt_init
            && self.dt_init <= self.dt_max
            && self.dt_max.is_finite();
        if !ok {
            return Err(Error::domain(format!(
                "need 0 < dt_min <= dt_init <= dt_max < inf, got {} / {} / {}",
                self.dt_min, self.dt_init, self.dt_max
            )));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::domain(format!("cfl must lie in (0, 1], got {}", self.cfl)));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::domain(format!("t_end must be positive, got {}", self.t_end)));
        }
        if !(self.u_cap > 0.0) {
            return Err(Error::domain(format!("u_cap must be positive, got {}", self.u_cap)));
        }
        if self.sample_every == 0 {
            return Err(Error::domain("sample_every must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlowUpReason {
    /// `‖u‖_∞` reached `u_cap`.
    UCap,
    /// The admissible step fell below `dt_min`.
    DtUnderflow,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Outcome {
    Completed { t_end: f64 },
    BlowUp { t_star: f64, reason: BlowUpReason },
    NumericalFailure { t: f64, description: String },
}

impl Outcome {
    pub fn is_blowup(&self) -> bool {
        matches!(self, Outcome::BlowUp { .. })
    }

    pub fn is_completed(&self) -> bool {
        matches!(self, Outcome::Completed { .. })
    }

    pub fn t_star(&self) -> Option<f64> {
        match *self {
            Outcome::BlowUp { t_star, .. } => Some(t_star),
            _ => None,
        }
    }

    /// Short label used in output files.
    pub fn label(&self) -> &'static str {
        match self {
            Outcome::Completed { .. } => "completed",
            Outcome::BlowUp { .. } => "blowup",
            Outcome::NumericalFailure { .. } => "numerical_failure",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub params: Params,
    pub controls: SolverControls,
    pub samples: Vec<(RadialState, VirialSample)>,
    pub outcome: Outcome,
    /// Largest cell density over every accepted step.
    pub max_u: f64,
    /// Steps whose result needed a monotonicity repair.
    pub repairs: usize,
    pub steps: usize,
}

impl Trajectory {
    pub fn final_state(&self) -> &RadialState {
        &self.samples.last().expect("trajectory has at least one sample").0
    }

    pub fn states(&self) -> impl Iterator<Item = &RadialState> {
        self.samples.iter().map(|(s, _)| s)
    }
}

/// Advances a state by one step of size `dt`.
pub fn step(state: &RadialState, dt: f64, params: &Params, scheme: Scheme) -> Result<RadialState> {
    if !(dt > 0.0) {
        return Err(Error::domain(format!("time step must be positive, got {dt}")));
    }
    check_compatible(state, params)?;
    let stepper = Stepper::new(Geometry::new(state.grid(), params.n), params, scheme);
    let advanced = stepper
        .advance(state.mass_fn(), dt)
        .map_err(|e| Error::Numerical(format!("at t = {}: {e}", state.t)))?;
    RadialState::from_mass_function(
        state.t + dt,
        state.shared_grid().clone(),
        params.n,
        params.mass,
        advanced.mass_fn,
    )
}

fn check_compatible(state: &RadialState, params: &Params) -> Result<()> {
    if state.dim() != params.n || state.mass() != params.mass {
        return Err(Error::domain(format!(
            "state (n = {}, M = {}) does not match params (n = {}, M = {})",
            state.dim(),
            state.mass(),
            params.n,
            params.mass
        )));
    }
    Ok(())
}

/// Integrates from `initial` until `t_end`, a declared blow-up, or a
/// numerical failure.
pub fn integrate(initial: &RadialState, params: &Params, controls: &SolverControls) -> Result<Trajectory> {
    controls.validate()?;
    check_compatible(initial, params)?;
    let geo = Geometry::new(initial.grid(), params.n);
    let terms = EnergyTerms::new(params)?;
    let stepper = Stepper::new(geo, params, controls.scheme);

    let grid = initial.shared_grid().clone();
    let mut state = initial.clone();
    let mut samples = vec![(state.clone(), VirialSample::with(&stepper.geo, &terms, &state, params))];
    let mut max_u = state.max_density();
    let mut repairs = 0usize;
    let mut consecutive = 0usize;
    let mut steps = 0usize;
    let mut dt_prev = 0.5 * controls.dt_init;
    let mut last_sampled = 0usize;

    let outcome = loop {
        let t = state.t;
        if t >= controls.t_end {
            break Outcome::Completed { t_end: t };
        }
        if max_u >= controls.u_cap {
            break Outcome::BlowUp {
                t_star: t,
                reason: BlowUpReason::UCap,
            };
        }
        let dt_allowed = stepper.max_dt(state.mass_fn(), controls.cfl);
        if dt_allowed < controls.dt_min {
            break Outcome::BlowUp {
                t_star: t,
                reason: BlowUpReason::DtUnderflow,
            };
        }
        let remaining = controls.t_end - t;
        let mut dt = dt_allowed.min(controls.dt_max).min(2.0 * dt_prev);
        // absorb a sliver of a final step
        if remaining <= 1.001 * dt {
            dt = remaining;
        }
        let advanced = match stepper.advance(state.mass_fn(), dt) {
            Ok(a) => a,
            Err(description) => break Outcome::NumericalFailure { t, description },
        };
        if advanced.repaired {
            repairs += 1;
            consecutive += 1;
            if consecutive > MAX_CONSECUTIVE_REPAIRS {
                break Outcome::NumericalFailure {
                    t,
                    description: format!("{consecutive} consecutive monotonicity repairs"),
                };
            }
        } else {
            consecutive = 0;
        }
        let t_next = if dt == remaining { controls.t_end } else { t + dt };
        state = match RadialState::from_mass_function(t_next, grid.clone(), params.n, params.mass, advanced.mass_fn) {
            Ok(s) => s,
            Err(e) => break Outcome::NumericalFailure { t, description: e.to_string() },
        };
        steps += 1;
        dt_prev = dt;
        max_u = max_u.max(state.max_density());
        if steps % controls.sample_every == 0 {
            samples.push((state.clone(), VirialSample::with(&stepper.geo, &terms, &state, params)));
            last_sampled = steps;
        }
    };
    if last_sampled != steps {
        let sample = VirialSample::with(&stepper.geo, &terms, &state, params);
        samples.push((state, sample));
    }
    Ok(Trajectory {
        params: *params,
        controls: *controls,
        samples,
        outcome,
        max_u,
        repairs,
        steps,
    })
}

/// Virial quantities for every sample at moment order `p`, with `dm_p/dt`
/// estimated by second-order finite differences on the non-uniform sample
/// times (one-sided at both ends).
pub fn virial_trace(traj: &Trajectory, p: f64) -> Result<Vec<VirialSample>> {
    if traj.samples.len() < 3 {
        return Err(Error::domain(format!(
            "virial trace needs at least 3 samples, got {}",
            traj.samples.len()
        )));
    }
    let params = traj.params.with_p(p)?;
    let geo = Geometry::new(traj.final_state().grid(), params.n);
    let terms = EnergyTerms::new(&params)?;
    let mut out: Vec<VirialSample> = traj
        .states()
        .map(|s| VirialSample::with(&geo, &terms, s, &params))
        .collect();
    let t: Vec<f64> = out.iter().map(|v| v.t).collect();
    let m: Vec<f64> = out.iter().map(|v| v.m_p).collect();
    let derivs = fd_derivative(&t, &m);
    for (v, d) in out.iter_mut().zip(derivs) {
        v.dmdt_fd = Some(d);
    }
    Ok(out)
}

/// Three-point derivative on a non-uniform grid.
fn fd_derivative(t: &[f64], y: &[f64]) -> Vec<f64> {
    let n = t.len();
    let three = |i0: usize, at: usize| {
        let (x0, x1, x2) = (t[i0], t[i0 + 1], t[i0 + 2]);
        let x = t[at];
        let l0 = (2.0 * x - x1 - x2) / ((x0 - x1) * (x0 - x2));
        let l1 = (2.0 * x - x0 - x2) / ((x1 - x0) * (x1 - x2));
        let l2 = (2.0 * x - x0 - x1) / ((x2 - x0) * (x2 - x1));
        l0 * y[i0] + l1 * y[i0 + 1] + l2 * y[i0 + 2]
    };
    (0..n)
        .map(|i| {
            if i == 0 {
                three(0, 0)
            } else if i == n - 1 {
                three(n - 3, n - 1)
            } else {
                three(i - 1, i)
            }
        })
        .collect()
}
