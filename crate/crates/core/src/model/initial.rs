use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::grid::RadialGrid;
use super::state::RadialState;
use crate::{Error, Result};

/// Initial density profiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialShape {
    /// `u0 = M δ^{-n}` on `B(0, δ)`, zero outside.
    ConcentratedBump { delta: f64 },
    /// `u0 = C (1 - (r/δ)^2)^2` on `B(0, δ)`, zero outside; C¹ with compact support.
    SmoothBump { delta: f64 },
    Uniform,
}

impl InitialShape {
    pub fn delta(&self) -> Option<f64> {
        match *self {
            InitialShape::ConcentratedBump { delta } | InitialShape::SmoothBump { delta } => {
                Some(delta)
            }
            InitialShape::Uniform => None,
        }
    }

    /// Mass function of the unit-mean profile evaluated at `r`, before
    /// normalization: any positive multiple of the exact `U`.
    fn raw_mass_fn(&self, r: f64, n: usize) -> f64 {
        let nf = n as f64;
        match *self {
            InitialShape::Uniform => r.powi(n as i32),
            InitialShape::ConcentratedBump { delta } => (r / delta).powi(n as i32).min(1.0),
            InitialShape::SmoothBump { delta } => {
                let s = r.min(delta);
                s.powi(n as i32) / nf - 2.0 * s.powi(n as i32 + 2) / ((nf + 2.0) * delta * delta)
                    + s.powi(n as i32 + 4) / ((nf + 4.0) * delta.powi(4))
            }
        }
    }
}

/// Projects `shape` onto `grid` through its exact mass function and rescales
/// so that `U(1) = M/n` holds exactly.
pub fn make_initial_data(
    shape: InitialShape,
    mass: f64,
    n: usize,
    grid: Arc<RadialGrid>,
) -> Result<RadialState> {
    if let Some(delta) = shape.delta() {
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(Error::domain(format!("bump radius must lie in (0, 1], got {delta}")));
        }
    }
    if !(mass >= 0.0 && mass.is_finite()) {
        return Err(Error::domain(format!("mean mass must be nonnegative, got {mass}")));
    }
    let top = mass / n as f64;
    let raw: Vec<f64> = grid.nodes().iter().map(|&r| shape.raw_mass_fn(r, n)).collect();
    let total = *raw.last().unwrap();
    let mut running = 0.0f64;
    let mut mass_fn: Vec<f64> = raw
        .iter()
        .map(|&x| {
            running = running.max(x * top / total).min(top);
            running
        })
        .collect();
    mass_fn[0] = 0.0;
    let last = mass_fn.len() - 1;
    mass_fn[last] = top;
    RadialState::from_mass_function(0.0, grid, n, mass, mass_fn)
}
