use std::sync::Arc;

use serde::Serialize;

use super::diffusion::DiffusionLaw;
use super::grid::{Geometry, RadialGrid};
use crate::{Error, Result};

/// Slack allowed when checking `α ≤ (n-2)/n` and when classifying a law as
/// critical; `m - 1` and `(n - 2)/n` differ in the last bits for `m = 2(n-1)/n`.
pub const ALPHA_EPS: f64 = 1e-12;

/// Relative size of a mass-function decrease still treated as round-off.
pub(crate) const MONOTONE_TOL: f64 = 1e-12;

/// Physical and analytic configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Params {
    /// Space dimension.
    pub n: usize,
    /// Mean value `M` of the initial density over the unit ball.
    #[serde(rename = "M")]
    pub mass: f64,
    pub diffusion: DiffusionLaw,
    /// Moment order.
    pub p: f64,
}

impl Params {
    pub fn new(n: usize, mass: f64, diffusion: DiffusionLaw, p: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::domain(format!("dimension must be >= 2, got {n}")));
        }
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::domain(format!("mean mass must be positive, got {mass}")));
        }
        let alpha = diffusion.alpha();
        if alpha > critical_alpha(n) + ALPHA_EPS {
            return Err(Error::domain(format!(
                "certificate exponent {alpha} exceeds the critical value (n-2)/n = {}",
                critical_alpha(n)
            )));
        }
        check_moment_order(p, alpha)?;
        Ok(Params {
            n,
            mass,
            diffusion,
            p,
        })
    }

    /// `M / n`, the value of `U(t, 1)`.
    pub fn mass_per_dim(&self) -> f64 {
        self.mass / self.n as f64
    }

    pub fn alpha(&self) -> f64 {
        self.diffusion.alpha()
    }

    /// True when the certificate exponent equals `(n-2)/n`.
    pub fn is_critical(&self) -> bool {
        (self.alpha() - critical_alpha(self.n)).abs() <= ALPHA_EPS
    }

    pub fn with_mass(&self, mass: f64) -> Result<Self> {
        Params::new(self.n, mass, self.diffusion, self.p)
    }

    pub fn with_p(&self, p: f64) -> Result<Self> {
        Params::new(self.n, self.mass, self.diffusion, p)
    }
}

/// `(n - 2) / n`.
pub fn critical_alpha(n: usize) -> f64 {
    (n as f64 - 2.0) / n as f64
}

pub(crate) fn check_moment_order(p: f64, alpha: f64) -> Result<()> {
    if p.is_finite() && (p > 1.0 || (p == 1.0 && alpha == 0.0)) {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "moment order must satisfy p > 1 (or p = 1 with alpha = 0), got p = {p}, alpha = {alpha}"
        )))
    }
}

/// Mass function and density on a radial grid at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialState {
    pub t: f64,
    grid: Arc<RadialGrid>,
    n: usize,
    mass: f64,
    mass_fn: Vec<f64>,
    density: Vec<f64>,
}

impl RadialState {
    /// Builds a state from mass-function values. `U(0)` must vanish and
    /// `U(1)` must equal `M/n` to round-off; both are then imposed exactly.
    pub fn from_mass_function(
        t: f64,
        grid: Arc<RadialGrid>,
        n: usize,
        mass: f64,
        mut mass_fn: Vec<f64>,
    ) -> Result<Self> {
        if n < 2 {
            return Err(Error::domain(format!("dimension must be >= 2, got {n}")));
        }
        if !(mass >= 0.0 && mass.is_finite()) {
            return Err(Error::domain(format!("mean mass must be nonnegative, got {mass}")));
        }
        if mass_fn.len() != grid.len() {
            return Err(Error::domain(format!(
                "mass function has {} values for {} grid nodes",
                mass_fn.len(),
                grid.len()
            )));
        }
        let top = mass / n as f64;
        let tol = 1e-10 * top.max(f64::MIN_POSITIVE);
        let last = mass_fn.len() - 1;
        if mass_fn[0].abs() > tol || (mass_fn[last] - top).abs() > tol {
            return Err(Error::domain(format!(
                "mass function must satisfy U(0) = 0 and U(1) = M/n = {top}, got {} and {}",
                mass_fn[0], mass_fn[last]
            )));
        }
        mass_fn[0] = 0.0;
        mass_fn[last] = top;
        let density = density_from_mass(&mass_fn, &grid, n)?;
        Ok(RadialState {
            t,
            grid,
            n,
            mass,
            mass_fn,
            density,
        })
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn shared_grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Mean mass `M`.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn mass_per_dim(&self) -> f64 {
        self.mass / self.n as f64
    }

    pub fn mass_fn(&self) -> &[f64] {
        &self.mass_fn
    }

    /// Nodal density.
    pub fn density(&self) -> &[f64] {
        &self.density
    }

    /// Density averaged over each cell `[r_j, r_{j+1}]`.
    pub fn cell_densities(&self) -> Vec<f64> {
        Geometry::new(&self.grid, self.n).cell_densities(&self.mass_fn)
    }

    /// `‖u‖_∞` as resolved by the grid (largest cell density).
    pub fn max_density(&self) -> f64 {
        self.cell_densities().into_iter().fold(0.0, f64::max)
    }
}

/// Chemoattractant profile `v` together with `∂r v`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChemoProfile {
    pub grid: Arc<RadialGrid>,
    pub v: Vec<f64>,
    pub dv_dr: Vec<f64>,
}

/// `U(r_j) = ∫_0^{r_j} u(ρ) ρ^{n-1} dρ` by the trapezoid rule in `u` with
/// the exact Jacobian measure of each cell, so constant densities integrate
/// exactly.
pub fn mass_from_density(density: &[f64], grid: &RadialGrid, n: usize) -> Result<Vec<f64>> {
    if density.len() != grid.len() {
        return Err(Error::domain(format!(
            "density has {} values for {} grid nodes",
            density.len(),
            grid.len()
        )));
    }
    if let Some((k, &u)) = density.iter().enumerate().find(|(_, &u)| !(u >= 0.0)) {
        return Err(Error::domain(format!("density at node {k} is {u}, must be >= 0")));
    }
    let geo = Geometry::new(grid, n);
    let mut out = Vec::with_capacity(density.len());
    let mut acc = 0.0;
    out.push(0.0);
    for (j, w) in density.windows(2).enumerate() {
        acc += 0.5 * (w[0] + w[1]) * geo.cell_measure[j];
        out.push(acc);
    }
    Ok(out)
}

/// Inverse of [`mass_from_density`]: nodal density from cell densities.
///
/// Interior nodes average the two adjacent cells, the boundary nodes take the
/// adjacent cell; at `r = 0` this is the one-sided limit `n U(r_1) / r_1^n`.
pub fn density_from_mass(mass_fn: &[f64], grid: &RadialGrid, n: usize) -> Result<Vec<f64>> {
    if mass_fn.len() != grid.len() {
        return Err(Error::domain(format!(
            "mass function has {} values for {} grid nodes",
            mass_fn.len(),
            grid.len()
        )));
    }
    let scale = mass_fn.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if mass_fn[0].abs() > MONOTONE_TOL * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::domain(format!("mass function must vanish at r = 0, got {}", mass_fn[0])));
    }
    let geo = Geometry::new(grid, n);
    let mut cells = geo.cell_densities(mass_fn);
    for (j, (c, w)) in cells.iter_mut().zip(mass_fn.windows(2)).enumerate() {
        let inc = w[1] - w[0];
        if !inc.is_finite() {
            return Err(Error::domain(format!("non-finite mass function near node {j}")));
        }
        if inc < 0.0 {
            if inc < -MONOTONE_TOL * scale {
                return Err(Error::domain(format!(
                    "mass function decreases on cell {j} by {}",
                    -inc
                )));
            }
            *c = 0.0;
        }
    }
    Ok(nodal_from_cells(&cells))
}

fn nodal_from_cells(cells: &[f64]) -> Vec<f64> {
    let big_j = cells.len();
    let mut u = Vec::with_capacity(big_j + 1);
    u.push(cells[0]);
    for w in cells.windows(2) {
        u.push(0.5 * (w[0] + w[1]));
    }
    u.push(cells[big_j - 1]);
    u
}

/// Solves the radial Poisson equation `0 = Δv + u - M` with `∂r v(1) = 0`,
/// fixing the constant by `∫_0^1 v r^{n-1} dr = 0`.
pub fn recover_v(state: &RadialState) -> ChemoProfile {
    let geo = Geometry::new(state.grid(), state.dim());
    let n = state.dim() as f64;
    let mass = state.mass();
    let u_big = state.mass_fn();
    let dv_dr: Vec<f64> = geo
        .r
        .iter()
        .zip(u_big)
        .zip(&geo.r_nm1)
        .map(|((&r, &big_u), &r_nm1)| {
            if r == 0.0 {
                0.0
            } else {
                mass * r / n - big_u / r_nm1
            }
        })
        .collect();
    let mut v = Vec::with_capacity(dv_dr.len());
    let mut acc = 0.0;
    v.push(0.0);
    for (j, w) in dv_dr.windows(2).enumerate() {
        acc += 0.5 * (w[0] + w[1]) * (geo.r[j + 1] - geo.r[j]);
        v.push(acc);
    }
    let mean = n * geo.integrate_weighted(v.iter().copied());
    v.iter_mut().for_each(|x| *x -= mean);
    ChemoProfile {
        grid: state.shared_grid().clone(),
        v,
        dv_dr,
    }
}
