//! Uniform rectangular grids, sampled scalar fields, and the discrete
//! residuals of the three forms of the Liouville equation.
//!
//! Nodes where a quantity is undefined hold `NaN` (the sentinel); every norm
//! skips them.

mod io;

pub use io::{read_field, read_mask, write_field, write_mask, FieldIoError};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("grid too small: {nx}x{ny} (need at least {min}x{min})")]
    GridTooSmall { nx: usize, ny: usize, min: usize },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("field has a non-positive entry {value} at node ({i}, {j})")]
    NonPositiveField { i: usize, j: usize, value: f64 },
    #[error("no finite entries to measure")]
    EmptyInterior,
    #[error("value array has length {found}, expected {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

/// Node `(i, j)` sits at `(x0 + i·hx, y0 + j·hy)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    pub nx: usize,
    pub ny: usize,
    pub x0: f64,
    pub y0: f64,
    pub hx: f64,
    pub hy: f64,
}

impl Grid2D {
    /// At least one cell in each direction is required; stencils that need
    /// interior nodes check their own minimum.
    pub fn new(nx: usize, ny: usize, x0: f64, y0: f64, hx: f64, hy: f64) -> Result<Self, FieldError> {
        if nx < 2 || ny < 2 {
            return Err(FieldError::GridTooSmall { nx, ny, min: 2 });
        }
        if !(hx > 0.0 && hy > 0.0 && hx.is_finite() && hy.is_finite()) {
            return Err(FieldError::InvalidGrid(format!("spacings must be positive, got {hx}, {hy}")));
        }
        if !(x0.is_finite() && y0.is_finite()) {
            return Err(FieldError::InvalidGrid("origin must be finite".into()));
        }
        Ok(Grid2D { nx, ny, x0, y0, hx, hy })
    }

    /// `nx × ny` nodes spanning `[x0, x1] × [y0, y1]` inclusive.
    pub fn from_bounds(x0: f64, y0: f64, x1: f64, y1: f64, nx: usize, ny: usize) -> Result<Self, FieldError> {
        if nx < 2 || ny < 2 {
            return Err(FieldError::GridTooSmall { nx, ny, min: 2 });
        }
        if !(x1 > x0 && y1 > y0) {
            return Err(FieldError::InvalidGrid(format!(
                "empty domain [{x0}, {x1}] x [{y0}, {y1}]"
            )));
        }
        Grid2D::new(nx, ny, x0, y0, (x1 - x0) / (nx - 1) as f64, (y1 - y0) / (ny - 1) as f64)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.hx
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        self.y0 + j as f64 * self.hy
    }

    /// Row-major in y: `values[j * nx + i]`.
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i + 1 == self.nx || j + 1 == self.ny
    }

    /// The `(nx-1) × (ny-1)` grid of cell centres.
    pub fn cell_centers(&self) -> Grid2D {
        Grid2D {
            nx: self.nx - 1,
            ny: self.ny - 1,
            x0: self.x0 + 0.5 * self.hx,
            y0: self.y0 + 0.5 * self.hy,
            hx: self.hx,
            hy: self.hy,
        }
    }

    /// Halves the spacing, keeping the same bounds.
    pub fn refined(&self) -> Grid2D {
        Grid2D {
            nx: 2 * self.nx - 1,
            ny: 2 * self.ny - 1,
            hx: 0.5 * self.hx,
            hy: 0.5 * self.hy,
            ..*self
        }
    }

    fn require(&self, min: usize) -> Result<(), FieldError> {
        if self.nx < min || self.ny < min {
            Err(FieldError::GridTooSmall { nx: self.nx, ny: self.ny, min })
        } else {
            Ok(())
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField2D {
    pub grid: Grid2D,
    pub values: Vec<f64>,
}

impl ScalarField2D {
    pub fn new(grid: Grid2D, values: Vec<f64>) -> Result<Self, FieldError> {
        if values.len() != grid.len() {
            return Err(FieldError::LengthMismatch { expected: grid.len(), found: values.len() });
        }
        Ok(ScalarField2D { grid, values })
    }

    pub fn filled(grid: Grid2D, value: f64) -> Self {
        ScalarField2D { grid, values: vec![value; grid.len()] }
    }

    /// Samples `f(x, y)` at every node.
    pub fn from_fn(grid: Grid2D, f: impl Fn(f64, f64) -> f64 + Sync) -> Self {
        let mut values = vec![0.0; grid.len()];
        values.par_chunks_mut(grid.nx).enumerate().for_each(|(j, row)| {
            let y = grid.y(j);
            for (i, v) in row.iter_mut().enumerate() {
                *v = f(grid.x(i), y);
            }
        });
        ScalarField2D { grid, values }
    }

    /// Evaluates `f(i, j)` at every node index.
    pub fn from_fn_indexed(grid: Grid2D, f: impl Fn(usize, usize) -> f64 + Sync) -> Self {
        let mut values = vec![0.0; grid.len()];
        values.par_chunks_mut(grid.nx).enumerate().for_each(|(j, row)| {
            for (i, v) in row.iter_mut().enumerate() {
                *v = f(i, j);
            }
        });
        ScalarField2D { grid, values }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64 + Sync) -> Self {
        ScalarField2D {
            grid: self.grid,
            values: self.values.par_iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn max_finite(&self) -> Option<f64> {
        self.values.iter().copied().filter(|v| v.is_finite()).reduce(f64::max)
    }
}

/// The constants of `Δu = K e^{au}` and `u_xy = K e^{au}`; both nonzero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LiouvilleParams {
    k: f64,
    a: f64,
}

impl LiouvilleParams {
    pub fn new(k: f64, a: f64) -> Result<Self, FieldError> {
        if k == 0.0 || a == 0.0 || !k.is_finite() || !a.is_finite() {
            return Err(FieldError::InvalidParams(format!(
                "K and a must be nonzero and finite, got K={k}, a={a}"
            )));
        }
        Ok(LiouvilleParams { k, a })
    }

    /// `K = a = 1`.
    pub fn unit() -> Self {
        LiouvilleParams { k: 1.0, a: 1.0 }
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn a(&self) -> f64 {
        self.a
    }
}

/// `Δ_h u − K e^{au}` at interior nodes (5-point Laplacian); boundary nodes
/// are `NaN`.
pub fn residual_elliptic(u: &ScalarField2D, p: LiouvilleParams) -> Result<ScalarField2D, FieldError> {
    let g = u.grid;
    g.require(3)?;
    let (ihx2, ihy2) = (1.0 / (g.hx * g.hx), 1.0 / (g.hy * g.hy));
    let mut values = vec![f64::NAN; g.len()];
    values
        .par_chunks_mut(g.nx)
        .enumerate()
        .filter(|(j, _)| *j > 0 && *j + 1 < g.ny)
        .for_each(|(j, row)| {
            for (i, r) in row.iter_mut().enumerate().take(g.nx - 1).skip(1) {
                let c = u.at(i, j);
                let lap = (u.at(i + 1, j) - 2.0 * c + u.at(i - 1, j)) * ihx2
                    + (u.at(i, j + 1) - 2.0 * c + u.at(i, j - 1)) * ihy2;
                *r = lap - p.k * (p.a * c).exp();
            }
        });
    Ok(ScalarField2D { grid: g, values })
}

#[inline]
fn cross_difference(u: &ScalarField2D, i: usize, j: usize) -> f64 {
    let g = &u.grid;
    (u.at(i + 1, j + 1) - u.at(i + 1, j) - u.at(i, j + 1) + u.at(i, j)) / (g.hx * g.hy)
}

#[inline]
fn cell_mean(u: &ScalarField2D, i: usize, j: usize) -> f64 {
    0.25 * (u.at(i, j) + u.at(i + 1, j) + u.at(i, j + 1) + u.at(i + 1, j + 1))
}

fn cell_map(u: &ScalarField2D, f: impl Fn(usize, usize) -> f64 + Sync) -> ScalarField2D {
    let cells = u.grid.cell_centers();
    let mut values = vec![0.0; cells.len()];
    values.par_chunks_mut(cells.nx).enumerate().for_each(|(j, row)| {
        for (i, r) in row.iter_mut().enumerate() {
            *r = f(i, j);
        }
    });
    ScalarField2D { grid: cells, values }
}

/// `D_xy u − K e^{a ū}` on the cell-centre grid, with `ū` the mean of the
/// four corners.
pub fn residual_hyperbolic(u: &ScalarField2D, p: LiouvilleParams) -> Result<ScalarField2D, FieldError> {
    u.grid.require(2)?;
    Ok(cell_map(u, |i, j| cross_difference(u, i, j) - p.k * (p.a * cell_mean(u, i, j)).exp()))
}

/// `D_xy(log T) / T̄ − K` per cell, where `T̄` is the geometric mean of the
/// four corner values. With `u = log T` this is exactly
/// `residual_hyperbolic(u, K, a = 1) / T̄`.
pub fn residual_log(t: &ScalarField2D, k: f64) -> Result<ScalarField2D, FieldError> {
    t.grid.require(2)?;
    if k == 0.0 || !k.is_finite() {
        return Err(FieldError::InvalidParams(format!("K must be nonzero, got {k}")));
    }
    check_positive(t)?;
    let logt = t.map(f64::ln);
    Ok(cell_map(&logt, |i, j| {
        let tbar = cell_mean(&logt, i, j).exp();
        cross_difference(&logt, i, j) / tbar - k
    }))
}

pub(crate) fn check_positive(t: &ScalarField2D) -> Result<(), FieldError> {
    for j in 0..t.grid.ny {
        for i in 0..t.grid.nx {
            let v = t.at(i, j);
            if !(v > 0.0) {
                return Err(FieldError::NonPositiveField { i, j, value: v });
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    pub max_abs: f64,
    pub l2: f64,
}

/// Max-norm and discrete L² norm `sqrt(hx·hy·Σ r²)` over non-sentinel
/// entries.
pub fn norms(r: &ScalarField2D) -> Result<Norms, FieldError> {
    let mut max_abs = 0.0_f64;
    let mut sum = 0.0;
    let mut count = 0usize;
    for &v in r.values.iter().filter(|v| !v.is_nan()) {
        max_abs = max_abs.max(v.abs());
        sum += v * v;
        count += 1;
    }
    if count == 0 {
        return Err(FieldError::EmptyInterior);
    }
    Ok(Norms { max_abs, l2: (r.grid.hx * r.grid.hy * sum).sqrt() })
}
