use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::model::{DiffusionLaw, InitialShape, Params, RadialGrid, DEFAULT_GRADING, DEFAULT_INTERVALS};
use crate::solver::{Scheme, SolverControls};
use crate::{Error, Result};

/// Flat run configuration; every key is spelled out in full in the JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(rename = "M")]
    pub mass: f64,
    #[serde(default = "default_p")]
    pub p: f64,

    #[serde(rename = "diffusion.kind", default = "default_diffusion")]
    pub diffusion_kind: String,
    #[serde(rename = "diffusion.c1", default, skip_serializing_if = "Option::is_none")]
    pub diffusion_c1: Option<f64>,
    #[serde(rename = "diffusion.c2", default, skip_serializing_if = "Option::is_none")]
    pub diffusion_c2: Option<f64>,
    #[serde(rename = "diffusion.alpha", default, skip_serializing_if = "Option::is_none")]
    pub diffusion_alpha: Option<f64>,
    #[serde(rename = "diffusion.m", default, skip_serializing_if = "Option::is_none")]
    pub diffusion_m: Option<f64>,

    #[serde(rename = "shape.kind", default = "default_shape")]
    pub shape_kind: String,
    #[serde(rename = "shape.delta", default, skip_serializing_if = "Option::is_none")]
    pub shape_delta: Option<f64>,

    #[serde(rename = "grid.J", default = "default_intervals")]
    pub grid_intervals: usize,
    #[serde(rename = "grid.graded", default = "default_graded")]
    pub grid_graded: bool,

    #[serde(rename = "controls.dt_init", default = "d::dt_init")]
    pub dt_init: f64,
    #[serde(rename = "controls.dt_min", default = "d::dt_min")]
    pub dt_min: f64,
    #[serde(rename = "controls.dt_max", default = "d::dt_max")]
    pub dt_max: f64,
    #[serde(rename = "controls.cfl", default = "d::cfl")]
    pub cfl: f64,
    #[serde(rename = "controls.t_end", default = "d::t_end")]
    pub t_end: f64,
    #[serde(rename = "controls.u_cap", default = "d::u_cap")]
    pub u_cap: f64,
    #[serde(rename = "controls.sample_every", default = "d::sample_every")]
    pub sample_every: usize,
    #[serde(rename = "controls.scheme", default = "d::scheme")]
    pub scheme: Scheme,

    #[serde(rename = "output.dir", default = "default_dir")]
    pub output_dir: PathBuf,
    #[serde(rename = "output.format", default = "default_format")]
    pub output_format: OutputFormat,
}

/// Encoding of the time-series files; summaries are always JSON.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

fn default_n() -> usize {
    2
}
fn default_p() -> f64 {
    2.0
}
fn default_diffusion() -> String {
    "constant".into()
}
fn default_shape() -> String {
    "concentrated_bump".into()
}
fn default_intervals() -> usize {
    DEFAULT_INTERVALS
}
fn default_graded() -> bool {
    true
}
fn default_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_format() -> OutputFormat {
    OutputFormat::Csv
}

mod d {
    use crate::solver::{Scheme, SolverControls};

    fn c() -> SolverControls {
        SolverControls::default()
    }
    pub fn dt_init() -> f64 {
        c().dt_init
    }
    pub fn dt_min() -> f64 {
        c().dt_min
    }
    pub fn dt_max() -> f64 {
        c().dt_max
    }
    pub fn cfl() -> f64 {
        c().cfl
    }
    pub fn t_end() -> f64 {
        c().t_end
    }
    pub fn u_cap() -> f64 {
        c().u_cap
    }
    pub fn sample_every() -> usize {
        c().sample_every
    }
    pub fn scheme() -> Scheme {
        c().scheme
    }
}

/// A config with every derived object built and checked.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub params: Params,
    pub shape: InitialShape,
    pub grid: Arc<RadialGrid>,
    pub controls: SolverControls,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::config(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn diffusion(&self) -> Result<DiffusionLaw> {
        let need = |v: Option<f64>, key: &str| {
            v.ok_or_else(|| Error::config(format!("diffusion.kind = {} needs {key}", self.diffusion_kind)))
        };
        let unused = |keys: &[(&str, Option<f64>)]| -> Result<()> {
            match keys.iter().find(|(_, v)| v.is_some()) {
                Some((k, _)) => Err(Error::config(format!(
                    "{k} is not used by diffusion.kind = {}",
                    self.diffusion_kind
                ))),
                None => Ok(()),
            }
        };
        match self.diffusion_kind.as_str() {
            "constant" => {
                unused(&[
                    ("diffusion.c1", self.diffusion_c1),
                    ("diffusion.c2", self.diffusion_c2),
                    ("diffusion.alpha", self.diffusion_alpha),
                    ("diffusion.m", self.diffusion_m),
                ])?;
                Ok(DiffusionLaw::constant())
            }
            "power_law" => {
                unused(&[("diffusion.m", self.diffusion_m)])?;
                DiffusionLaw::power_law(
                    need(self.diffusion_c1, "diffusion.c1")?,
                    need(self.diffusion_c2, "diffusion.c2")?,
                    need(self.diffusion_alpha, "diffusion.alpha")?,
                )
            }
            "porous_medium" => {
                unused(&[
                    ("diffusion.c1", self.diffusion_c1),
                    ("diffusion.c2", self.diffusion_c2),
                    ("diffusion.alpha", self.diffusion_alpha),
                ])?;
                DiffusionLaw::porous_medium(need(self.diffusion_m, "diffusion.m")?)
            }
            other => Err(Error::config(format!(
                "diffusion.kind must be constant, power_law or porous_medium, got {other}"
            ))),
        }
    }

    pub fn shape(&self) -> Result<InitialShape> {
        let delta = || {
            self.shape_delta
                .ok_or_else(|| Error::config(format!("shape.kind = {} needs shape.delta", self.shape_kind)))
        };
        match self.shape_kind.as_str() {
            "concentrated_bump" => Ok(InitialShape::ConcentratedBump { delta: delta()? }),
            "smooth_bump" => Ok(InitialShape::SmoothBump { delta: delta()? }),
            "uniform" => match self.shape_delta {
                Some(_) => Err(Error::config("shape.delta is not used by shape.kind = uniform")),
                None => Ok(InitialShape::Uniform),
            },
            other => Err(Error::config(format!(
                "shape.kind must be concentrated_bump, smooth_bump or uniform, got {other}"
            ))),
        }
    }

    pub fn controls(&self) -> SolverControls {
        SolverControls {
            dt_init: self.dt_init,
            dt_min: self.dt_min,
            dt_max: self.dt_max,
            cfl: self.cfl,
            t_end: self.t_end,
            u_cap: self.u_cap,
            sample_every: self.sample_every,
            scheme: self.scheme,
        }
    }

    pub fn grid(&self) -> Result<RadialGrid> {
        if self.grid_graded {
            RadialGrid::graded(self.grid_intervals, DEFAULT_GRADING)
        } else {
            RadialGrid::uniform(self.grid_intervals)
        }
    }

    /// Builds and validates every derived object; any failure is a config error.
    pub fn resolve(&self) -> Result<Resolved> {
        let as_config = |e: Error| match e {
            Error::Config(_) => e,
            other => Error::config(other.to_string()),
        };
        let params = Params::new(self.n, self.mass, self.diffusion()?, self.p).map_err(as_config)?;
        let shape = self.shape()?;
        if let Some(delta) = shape.delta() {
            if !(delta > 0.0 && delta <= 1.0) {
                return Err(Error::config(format!("shape.delta must lie in (0, 1], got {delta}")));
            }
        }
        let grid = Arc::new(self.grid().map_err(as_config)?);
        let controls = self.controls();
        controls.validate().map_err(as_config)?;
        Ok(Resolved {
            params,
            shape,
            grid,
            controls,
        })
    }
}
