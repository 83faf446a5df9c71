use serde::Serialize;

use crate::{Error, Result};

/// Smallest admissible number of intervals.
pub const MIN_INTERVALS: usize = 16;

/// Default number of intervals `J`.
pub const DEFAULT_INTERVALS: usize = 512;

/// Default spacing ratio `h_k / h_{k+1}` of the graded grid.
pub const DEFAULT_GRADING: f64 = 0.98;

/// Nodes `0 = r_0 < r_1 < ... < r_J = 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialGrid {
    nodes: Vec<f64>,
}

impl RadialGrid {
    pub fn uniform(intervals: usize) -> Result<Self> {
        check_intervals(intervals)?;
        let h = 1.0 / intervals as f64;
        let mut nodes: Vec<f64> = (0..=intervals).map(|j| j as f64 * h).collect();
        nodes[intervals] = 1.0;
        Ok(RadialGrid { nodes })
    }

    /// Geometric grid clustered at the origin: consecutive spacings satisfy
    /// `h_k = ratio · h_{k+1}`.
    pub fn graded(intervals: usize, ratio: f64) -> Result<Self> {
        check_intervals(intervals)?;
        if !(ratio > 0.0 && ratio <= 1.0) {
            return Err(Error::domain(format!("grading ratio must lie in (0, 1], got {ratio}")));
        }
        let growth = 1.0 / ratio;
        let mut spacing = Vec::with_capacity(intervals);
        let mut h = 1.0;
        for _ in 0..intervals {
            spacing.push(h);
            h *= growth;
        }
        let total: f64 = spacing.iter().sum();
        let mut nodes = Vec::with_capacity(intervals + 1);
        let mut r = 0.0;
        nodes.push(0.0);
        for s in &spacing[..intervals - 1] {
            r += s / total;
            nodes.push(r);
        }
        nodes.push(1.0);
        Self::from_nodes(nodes)
    }

    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < MIN_INTERVALS + 1 {
            return Err(Error::domain(format!(
                "grid needs at least {} nodes, got {}",
                MIN_INTERVALS + 1,
                nodes.len()
            )));
        }
        if nodes[0] != 0.0 || *nodes.last().unwrap() != 1.0 {
            return Err(Error::domain("grid endpoints must be exactly 0 and 1"));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain("grid nodes must be strictly increasing"));
        }
        Ok(RadialGrid { nodes })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Number of intervals `J` (there are `J + 1` nodes).
    pub fn intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn max_spacing(&self) -> f64 {
        self.nodes.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    pub fn min_spacing(&self) -> f64 {
        self.nodes.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }

    /// Cell midpoints `(r_j + r_{j+1}) / 2`.
    pub fn midpoints(&self) -> Vec<f64> {
        self.nodes.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }
}

fn check_intervals(intervals: usize) -> Result<()> {
    if intervals < MIN_INTERVALS {
        return Err(Error::domain(format!(
            "grid needs at least {MIN_INTERVALS} intervals, got {intervals}"
        )));
    }
    Ok(())
}

/// Precomputed metric quantities of a grid in dimension `n`.
///
/// Cell `j` is `[r_j, r_{j+1}]`; its Jacobian measure `∫ ρ^{n-1} dρ` is
/// `(r_{j+1}^n - r_j^n)/n`. Node weights integrate `ρ^{n-1}` exactly over the
/// dual cell `[mid_{k-1}, mid_k]` (with `mid_{-1} = 0`, `mid_J = 1`).
#[derive(Debug, Clone)]
pub(crate) struct Geometry {
    pub n: usize,
    pub r: Vec<f64>,
    /// `r_k^{n-1}`
    pub r_nm1: Vec<f64>,
    /// `n / (r_{j+1}^n - r_j^n)`: converts a mass increment into a cell density.
    pub density_scale: Vec<f64>,
    /// `(r_{j+1}^n - r_j^n) / n`
    pub cell_measure: Vec<f64>,
    pub mid: Vec<f64>,
    pub node_weight: Vec<f64>,
    /// `mid_k - mid_{k-1}` for interior nodes (index 0 and J unused).
    pub dual_width: Vec<f64>,
    /// `min(r_k - r_{k-1}, r_{k+1} - r_k)` for interior nodes.
    pub local_spacing: Vec<f64>,
}

impl Geometry {
    pub fn new(grid: &RadialGrid, n: usize) -> Self {
        let r = grid.nodes().to_vec();
        let nf = n as f64;
        let big_j = r.len() - 1;
        let rn: Vec<f64> = r.iter().map(|&x| x.powi(n as i32)).collect();
        let r_nm1 = r.iter().map(|&x| x.powi(n as i32 - 1)).collect();
        let cell_measure: Vec<f64> = (0..big_j).map(|j| (rn[j + 1] - rn[j]) / nf).collect();
        let density_scale = cell_measure.iter().map(|&c| 1.0 / c).collect();
        let mid = grid.midpoints();
        let mut node_weight = vec![0.0; big_j + 1];
        let mut prev = 0.0;
        for k in 0..=big_j {
            let next = if k < big_j { mid[k].powi(n as i32) } else { 1.0 };
            node_weight[k] = (next - prev) / nf;
            prev = next;
        }
        let mut dual_width = vec![0.0; big_j + 1];
        let mut local_spacing = vec![0.0; big_j + 1];
        for k in 1..big_j {
            dual_width[k] = mid[k] - mid[k - 1];
            local_spacing[k] = (r[k] - r[k - 1]).min(r[k + 1] - r[k]);
        }
        Geometry {
            n,
            r,
            r_nm1,
            density_scale,
            cell_measure,
            mid,
            node_weight,
            dual_width,
            local_spacing,
        }
    }

    pub fn intervals(&self) -> usize {
        self.r.len() - 1
    }

    /// Cell densities `n (U_{j+1} - U_j) / (r_{j+1}^n - r_j^n)`.
    pub fn cell_densities(&self, mass_fn: &[f64]) -> Vec<f64> {
        mass_fn
            .windows(2)
            .zip(&self.density_scale)
            .map(|(w, s)| (w[1] - w[0]) * s)
            .collect()
    }

    /// `∫_0^1 g(r) r^{n-1} dr` from node values.
    pub fn integrate_weighted(&self, values: impl IntoIterator<Item = f64>) -> f64 {
        values.into_iter().zip(&self.node_weight).map(|(g, w)| g * w).sum()
    }
}
