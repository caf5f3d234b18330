//! Radial grids on `[r0, R]` with quadrature weights for integrals
//! `∫ f(r) r^{n-1} dr`, and sampled radial fields.
//!
//! Weights are the exact moments of the piecewise-linear hat functions
//! against `r^{n-1} dr`, so the quadrature integrates any piecewise-linear
//! function exactly; in particular the weight sum equals `(R^n − r0^n)/n`
//! to roundoff.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A strictly increasing radial grid in dimension `n ≥ 5` with hat-moment
/// quadrature weights.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialGrid {
    n: u32,
    r: Vec<f64>,
    w: Vec<f64>,
}

/// Exact moments over one cell `[a, b]`: contribution of the two hat
/// functions anchored at `a` and `b` to `∫ f r^{n-1} dr` for piecewise-linear
/// `f`.
fn cell_moments(n: u32, a: f64, b: f64) -> (f64, f64) {
    let np = n as i32;
    let pn = (b.powi(np) - a.powi(np)) / n as f64;
    let pn1 = (b.powi(np + 1) - a.powi(np + 1)) / (n as f64 + 1.0);
    let h = b - a;
    ((b * pn - pn1) / h, (pn1 - a * pn) / h)
}

impl RadialGrid {
    fn build(n: u32, r: Vec<f64>) -> Result<Self> {
        if n < 5 {
            return Err(Error::InvalidConfig(format!(
                "dimension must be >= 5, got {n}"
            )));
        }
        if r.len() < 2 {
            return Err(Error::InvalidConfig("grid needs at least 2 nodes".into()));
        }
        if r[0] < 0.0 {
            return Err(Error::InvalidConfig("grid nodes must be >= 0".into()));
        }
        if !r.windows(2).all(|p| p[1] > p[0]) {
            return Err(Error::InvalidConfig(
                "grid nodes must be strictly increasing".into(),
            ));
        }
        if !r.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidConfig("grid nodes must be finite".into()));
        }
        let mut w = vec![0.0; r.len()];
        for i in 0..r.len() - 1 {
            let (wa, wb) = cell_moments(n, r[i], r[i + 1]);
            w[i] += wa;
            w[i + 1] += wb;
        }
        Ok(Self { n, r, w })
    }

    /// Uniform grid of `m` nodes on `[0, rmax]`.
    pub fn uniform(n: u32, rmax: f64, m: usize) -> Result<Self> {
        if !(rmax > 0.0) {
            return Err(Error::InvalidConfig("rmax must be > 0".into()));
        }
        let r = (0..m)
            .map(|i| rmax * i as f64 / (m - 1).max(1) as f64)
            .collect();
        Self::build(n, r)
    }

    /// Geometric grid `r_i = r_min · ρ^i`, `i = 0..m`, with ratio `ρ > 1`.
    pub fn geometric(n: u32, r_min: f64, ratio: f64, m: usize) -> Result<Self> {
        if !(r_min > 0.0) || !(ratio > 1.0) {
            return Err(Error::InvalidConfig(
                "geometric grid needs r_min > 0, ratio > 1".into(),
            ));
        }
        let r = (0..m).map(|i| r_min * ratio.powi(i as i32)).collect();
        Self::build(n, r)
    }

    /// Grid graded toward the origin: `r_i = rmax (ρ^i − 1)/(ρ^{m-1} − 1)`.
    pub fn graded(n: u32, rmax: f64, ratio: f64, m: usize) -> Result<Self> {
        if !(rmax > 0.0) || !(ratio > 1.0) {
            return Err(Error::InvalidConfig(
                "graded grid needs rmax > 0, ratio > 1".into(),
            ));
        }
        let denom = ratio.powi(m as i32 - 1) - 1.0;
        let r = (0..m)
            .map(|i| rmax * (ratio.powi(i as i32) - 1.0) / denom)
            .collect();
        Self::build(n, r)
    }

    /// Sinh-stretched grid on `[0, rmax]`: `r_i = rmax sinh(β i/(m-1))/sinh β`.
    pub fn sinh(n: u32, rmax: f64, beta: f64, m: usize) -> Result<Self> {
        if !(rmax > 0.0) || !(beta > 0.0) {
            return Err(Error::InvalidConfig(
                "sinh grid needs rmax > 0, beta > 0".into(),
            ));
        }
        let s = beta.sinh();
        let r = (0..m)
            .map(|i| rmax * (beta * i as f64 / (m - 1).max(1) as f64).sinh() / s)
            .collect();
        Self::build(n, r)
    }

    /// Arbitrary node set (validated).
    pub fn from_nodes(n: u32, r: Vec<f64>) -> Result<Self> {
        Self::build(n, r)
    }

    pub fn dim(&self) -> u32 {
        self.n
    }

    pub fn nodes(&self) -> &[f64] {
        &self.r
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// `∫ f r^{n-1} dr` for nodal values `f`.
    pub fn integrate(&self, f: &[f64]) -> Result<f64> {
        if f.len() != self.r.len() {
            return Err(Error::InvalidConfig(format!(
                "field has {} values on a grid of {} nodes",
                f.len(),
                self.r.len()
            )));
        }
        Ok(self.w.iter().zip(f).map(|(w, v)| w * v).sum())
    }

    /// `∫ f(r) r^{n-1} dr` for a function sampled at the nodes.
    pub fn integrate_fn(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.w.iter().zip(&self.r).map(|(w, &r)| w * f(r)).sum()
    }

    /// Sample a function into a field on this grid.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> RadialField {
        RadialField {
            grid: self.clone(),
            values: self.r.iter().map(|&r| f(r)).collect(),
        }
    }
}

/// A radial profile sampled on a [`RadialGrid`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialField {
    pub grid: RadialGrid,
    pub values: Vec<f64>,
}

impl RadialField {
    pub fn new(grid: RadialGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidConfig(format!(
                "field has {} values on a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `∫ f r^{n-1} dr` over the grid support.
    pub fn integrate(&self) -> f64 {
        self.grid
            .weights()
            .iter()
            .zip(&self.values)
            .map(|(w, v)| w * v)
            .sum()
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    /// Piecewise-linear interpolation at radius `r`, clamped to the end
    /// values outside the grid support.
    pub fn interp(&self, r: f64) -> f64 {
        let nodes = self.grid.nodes();
        if r <= nodes[0] {
            return self.values[0];
        }
        if r >= nodes[nodes.len() - 1] {
            return self.values[nodes.len() - 1];
        }
        let j = nodes.partition_point(|&x| x <= r);
        let (a, b) = (nodes[j - 1], nodes[j]);
        let t = (r - a) / (b - a);
        self.values[j - 1] * (1.0 - t) + self.values[j] * t
    }
}
