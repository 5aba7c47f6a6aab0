//! Discrete Liouville action
//!
//! ```text
//! S[φ] = C Σ_cells hx·hy·( ½(gx² + gy²) + μ² e^{φ̄} )
//! ```
//!
//! with `gx`, `gy` the averaged forward differences across each cell and `φ̄`
//! the mean of its four corners. Its Euler–Lagrange equation is
//! `Δφ = μ² e^φ`, i.e. `Δu = K e^{au}` with `K = μ²`, `a = 1`.

use crate::fields::{FieldError, ScalarField2D};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ActionParams {
    c: f64,
    mu: f64,
}

impl ActionParams {
    pub fn new(c: f64, mu: f64) -> Result<Self, FieldError> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(FieldError::InvalidParams(format!("C must be positive and finite, got {c}")));
        }
        if !mu.is_finite() {
            return Err(FieldError::InvalidParams(format!("mu must be finite, got {mu}")));
        }
        Ok(ActionParams { c, mu })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }
}

struct Cell {
    gx: f64,
    gy: f64,
    mean: f64,
}

fn cell(phi: &ScalarField2D, i: usize, j: usize) -> Cell {
    let g = &phi.grid;
    let (p00, p10, p01, p11) = (phi.at(i, j), phi.at(i + 1, j), phi.at(i, j + 1), phi.at(i + 1, j + 1));
    Cell {
        gx: (p10 - p00 + p11 - p01) / (2.0 * g.hx),
        gy: (p01 - p00 + p11 - p10) / (2.0 * g.hy),
        mean: 0.25 * (p00 + p10 + p01 + p11),
    }
}

pub fn action_value(phi: &ScalarField2D, p: ActionParams) -> Result<f64, FieldError> {
    let g = phi.grid;
    if g.nx < 2 || g.ny < 2 {
        return Err(FieldError::GridTooSmall { nx: g.nx, ny: g.ny, min: 2 });
    }
    let mu2 = p.mu * p.mu;
    let rows: Vec<f64> = (0..g.ny - 1)
        .into_par_iter()
        .map(|j| {
            (0..g.nx - 1)
                .map(|i| {
                    let c = cell(phi, i, j);
                    0.5 * (c.gx * c.gx + c.gy * c.gy) + mu2 * c.mean.exp()
                })
                .sum::<f64>()
        })
        .collect();
    Ok(p.c * g.hx * g.hy * rows.iter().sum::<f64>())
}

/// Exact gradient of [`action_value`] with respect to the interior nodes;
/// boundary entries are `NaN` (those nodes are held fixed).
pub fn action_gradient(phi: &ScalarField2D, p: ActionParams) -> Result<ScalarField2D, FieldError> {
    let g = phi.grid;
    if g.nx < 2 || g.ny < 2 {
        return Err(FieldError::GridTooSmall { nx: g.nx, ny: g.ny, min: 2 });
    }
    let mu2 = p.mu * p.mu;
    let w = p.c * g.hx * g.hy;
    Ok(ScalarField2D::from_fn_indexed(g, |i, j| {
        if g.is_boundary(i, j) {
            return f64::NAN;
        }
        // the node is corner (di, dj) of the cell with origin (i − di, j − dj)
        let mut s = 0.0;
        for (di, dj) in [(0usize, 0usize), (1, 0), (0, 1), (1, 1)] {
            let c = cell(phi, i - di, j - dj);
            let sx = if di == 1 { 1.0 } else { -1.0 };
            let sy = if dj == 1 { 1.0 } else { -1.0 };
            s += c.gx * sx / (2.0 * g.hx) + c.gy * sy / (2.0 * g.hy) + 0.25 * mu2 * c.mean.exp();
        }
        w * s
    }))
}
