//! Radially symmetric quasilinear Smoluchowski–Poisson (parabolic–elliptic
//! Keller–Segel) system on the unit ball of R^n, n ≥ 2.
//!
//! The crate works with the normalized mass function
//! `U(t, r) = (1 / (n |B(0,1)|)) ∫_{B(0,r)} u(t, x) dx`, which reduces the
//! coupled system to the single local equation
//!
//! ```text
//! ∂t U = r^{n-1} ∂r A(u) + u U - (M/n) r^n u,   U(t,0) = 0,  U(t,1) = M/n,
//! ```
//!
//! with `u = r^{1-n} ∂r U` and `A' = a`, `A(0) = 0`.
//!
//! * [`model`]: parameters, diffusion laws, radial grids, states and initial data.
//! * [`functionals`]: `κ_p(α)`, `E_{M,p}`, the moments `m_p`, the remainder
//!   `R_p` and the per-step audit of the bound `R_p ≤ E(m_p) - M m_p + ...`.
//! * [`solver`]: time integration with blow-up detection and virial traces.
//! * [`analysis`]: blow-up criterion, critical masses, `p` scans, blow-up time
//!   bounds and empirical thresholds.
//! * [`cli`]: the `radial-ks` command-line front end.

pub mod analysis;
pub mod cli;
mod error;
pub mod functionals;
pub mod model;
pub mod quadrature;
pub mod solver;

pub use error::{Error, Result};
pub use model::{
    ChemoProfile, DiffusionKind, DiffusionLaw, InitialShape, Params, RadialGrid, RadialState,
};
