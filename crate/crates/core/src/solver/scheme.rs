//! Spatial operator and one-step updates for the mass-function equation.
//!
//! At an interior node the flux `r^{n-1} (∂r A(u) - u ∂r v)` is assembled from
//! the two neighbouring cell densities. Diffusion uses the centred difference
//! of `A` across the node. The drift density is the cell average when the
//! local Péclet number `|∂r v| w / a` is at most 2 and the upwind cell
//! otherwise, so off-diagonal coefficients stay nonnegative.

use serde::{Deserialize, Serialize};

use super::isotonic::project_nondecreasing;
use super::tridiag;
use crate::model::{DiffusionLaw, Geometry, Params};

/// Time discretization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    ExplicitEuler,
    /// Linearly implicit Euler: `A(u)` is linearized about the old state
    /// and the drift is transported implicitly with the old velocity.
    SemiImplicitDiffusion,
}

/// Tridiagonal operator `L(U)_i = lower_i U_{i-1} - (lower_i + upper_i) U_i + upper_i U_{i+1}`
/// plus an explicit source, on interior nodes `1..J`.
struct Operator {
    lower: Vec<f64>,
    upper: Vec<f64>,
    source: Vec<f64>,
    /// `max_i (lower_i + upper_i)`
    max_rate: f64,
    /// Largest advective rate `|∂r v| / h` seen by a node.
    max_drift_rate: f64,
}

/// Result of one accepted step.
pub(crate) struct Advanced {
    pub mass_fn: Vec<f64>,
    /// A decrease below `-1e-12 M/n` had to be projected away.
    pub repaired: bool,
}

pub(crate) struct Stepper {
    pub geo: Geometry,
    law: DiffusionLaw,
    mass: f64,
    mass_per_dim: f64,
    scheme: Scheme,
}

impl Stepper {
    pub fn new(geo: Geometry, params: &Params, scheme: Scheme) -> Self {
        Stepper {
            geo,
            law: params.diffusion,
            mass: params.mass,
            mass_per_dim: params.mass_per_dim(),
            scheme,
        }
    }

    fn operator(&self, mass_fn: &[f64]) -> Operator {
        let geo = &self.geo;
        let big_j = geo.intervals();
        let nf = geo.n as f64;
        let cells: Vec<f64> = geo.cell_densities(mass_fn).into_iter().map(|u| u.max(0.0)).collect();
        let coef: Vec<f64> = cells.iter().map(|&u| self.law.coefficient(u)).collect();
        let newton: Vec<f64> = cells
            .iter()
            .zip(&coef)
            .map(|(&u, &a)| self.law.antiderivative(u) - a * u)
            .collect();

        let mut lower = vec![0.0; big_j + 1];
        let mut upper = vec![0.0; big_j + 1];
        let mut source = vec![0.0; big_j + 1];
        let mut max_rate = 0.0f64;
        let mut max_drift_rate = 0.0f64;
        for i in 1..big_j {
            let r = geo.r[i];
            let c = geo.r_nm1[i];
            let w = geo.dual_width[i];
            let (sl, sr) = (geo.density_scale[i - 1], geo.density_scale[i]);
            let (al, ar) = (coef[i - 1], coef[i]);
            let vel = self.mass * r / nf - mass_fn[i] / c;

            let a_min = al.min(ar);
            let central = a_min > 0.0 && vel.abs() * w <= 2.0 * a_min;
            let (wl, wr) = if central {
                (0.5, 0.5)
            } else if vel > 0.0 {
                (1.0, 0.0)
            } else {
                (0.0, 1.0)
            };
            lower[i] = c * (al * sl / w + vel * wl * sl);
            upper[i] = c * (ar * sr / w - vel * wr * sr);
            source[i] = c / w * (newton[i] - newton[i - 1]);
            max_rate = max_rate.max(lower[i] + upper[i]);
            max_drift_rate = max_drift_rate.max(vel.abs() / geo.local_spacing[i]);
        }
        Operator {
            lower,
            upper,
            source,
            max_rate,
            max_drift_rate,
        }
    }

    /// Largest stable/accurate step for the current state under `cfl`.
    pub fn max_dt(&self, mass_fn: &[f64], cfl: f64) -> f64 {
        let op = self.operator(mass_fn);
        let rate = match self.scheme {
            Scheme::ExplicitEuler => op.max_rate,
            Scheme::SemiImplicitDiffusion => op.max_drift_rate,
        };
        if rate > 0.0 {
            cfl / rate
        } else {
            f64::INFINITY
        }
    }

    /// Advances `U` by `dt`. Returns `Err` with a description on non-finite output.
    pub fn advance(&self, mass_fn: &[f64], dt: f64) -> Result<Advanced, String> {
        let big_j = self.geo.intervals();
        let op = self.operator(mass_fn);
        let mut next = vec![0.0; big_j + 1];
        match self.scheme {
            Scheme::ExplicitEuler => {
                for i in 1..big_j {
                    let flux = op.lower[i] * (mass_fn[i - 1] - mass_fn[i])
                        + op.upper[i] * (mass_fn[i + 1] - mass_fn[i]);
                    next[i] = mass_fn[i] + dt * (flux + op.source[i]);
                }
            }
            Scheme::SemiImplicitDiffusion => {
                let m = big_j - 1;
                let mut lo = vec![0.0; m];
                let mut di = vec![0.0; m];
                let mut up = vec![0.0; m];
                let mut rhs = vec![0.0; m];
                for i in 1..big_j {
                    let k = i - 1;
                    lo[k] = -dt * op.lower[i];
                    up[k] = -dt * op.upper[i];
                    di[k] = 1.0 + dt * (op.lower[i] + op.upper[i]);
                    rhs[k] = mass_fn[i] + dt * op.source[i];
                }
                // U_0 = 0 contributes nothing; U_J = M/n moves to the right-hand side
                rhs[m - 1] += dt * op.upper[big_j - 1] * self.mass_per_dim;
                tridiag::solve(&lo, &di, &up, &mut rhs);
                next[1..big_j].copy_from_slice(&rhs);
            }
        }
        next[0] = 0.0;
        next[big_j] = self.mass_per_dim;
        if let Some(k) = next.iter().position(|x| !x.is_finite()) {
            return Err(format!("non-finite mass function at node {k}"));
        }
        let min_increment = next.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        let repaired = min_increment < -crate::model::MONOTONE_TOL * self.mass_per_dim;
        if min_increment < 0.0 {
            project_nondecreasing(&mut next);
        }
        Ok(Advanced {
            mass_fn: next,
            repaired,
        })
    }
}
