//! Domain types, diffusion laws, radial grids, initial data and the
//! transforms between density `u`, mass function `U` and chemoattractant `v`.

mod diffusion;
mod grid;
mod initial;
mod state;

pub use diffusion::{Certificate, DiffusionKind, DiffusionLaw};
pub(crate) use diffusion::pow0;
pub(crate) use grid::Geometry;
pub use grid::{RadialGrid, DEFAULT_GRADING, DEFAULT_INTERVALS, MIN_INTERVALS};
pub use initial::{make_initial_data, InitialShape};
pub(crate) use state::{check_moment_order, MONOTONE_TOL};
pub use state::{
    critical_alpha, density_from_mass, mass_from_density, recover_v, ChemoProfile, Params,
    RadialState, ALPHA_EPS,
};
