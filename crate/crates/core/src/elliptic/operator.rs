//! Discrete Dirichlet operators: the 5-point Laplacian on a rectangle and
//! the radial Laplacian `u'' + u'/r` on the unit disk, both written as
//! `F(u) = L u + b − K e^{a u}` over the free (non-boundary) nodes.

use super::{Boundary, EllipticError, Geometry, RadialProfile, Solution};
use crate::fields::{Grid2D, ScalarField2D};
use crate::linalg::BandMatrix;

#[derive(Debug, Clone)]
enum Layout {
    Rect { grid: Grid2D, boundary: Vec<f64> },
    Radial { n: usize, boundary: f64 },
}

/// The assembled linear part of a Dirichlet problem.
#[derive(Debug, Clone)]
pub struct DiscreteProblem {
    rows: Vec<Vec<(usize, f64)>>,
    rhs: Vec<f64>,
    bandwidth: usize,
    scale: f64,
    layout: Layout,
}

impl DiscreteProblem {
    pub fn new(geometry: &Geometry, boundary: &Boundary) -> Result<Self, EllipticError> {
        match geometry {
            Geometry::Rectangle(grid) => Self::rectangle(*grid, boundary),
            Geometry::Disk { n } => {
                let value = match boundary {
                    Boundary::Constant(c) => *c,
                    Boundary::Expr(e) if e.is_constant() => e.eval(&vec![0.0; e.vars().len()])?,
                    _ => {
                        return Err(EllipticError::InvalidProblem(
                            "disk geometry needs a constant boundary value".into(),
                        ))
                    }
                };
                Self::radial(*n, value)
            }
        }
    }

    fn rectangle(grid: Grid2D, boundary: &Boundary) -> Result<Self, EllipticError> {
        if grid.nx < 3 || grid.ny < 3 {
            return Err(crate::fields::FieldError::GridTooSmall { nx: grid.nx, ny: grid.ny, min: 3 }.into());
        }
        let bvals: Vec<f64> = match boundary {
            Boundary::Constant(c) => vec![*c; grid.len()],
            Boundary::Expr(e) => {
                if e.vars().len() != 2 {
                    return Err(EllipticError::InvalidProblem(format!(
                        "boundary expression must be in (x, y): `{e}`"
                    )));
                }
                let mut v = vec![f64::NAN; grid.len()];
                for j in 0..grid.ny {
                    for i in 0..grid.nx {
                        if grid.is_boundary(i, j) {
                            v[grid.index(i, j)] = e.eval(&[grid.x(i), grid.y(j)])?;
                        }
                    }
                }
                v
            }
            Boundary::Samples(f) => {
                if f.grid != grid {
                    return Err(EllipticError::InvalidProblem("boundary samples live on a different grid".into()));
                }
                f.values.clone()
            }
        };
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                if grid.is_boundary(i, j) && !bvals[grid.index(i, j)].is_finite() {
                    return Err(EllipticError::InvalidProblem(format!("non-finite boundary value at ({i}, {j})")));
                }
            }
        }

        let mx = grid.nx - 2;
        let my = grid.ny - 2;
        let (cx, cy) = (1.0 / (grid.hx * grid.hx), 1.0 / (grid.hy * grid.hy));
        let mut rows = Vec::with_capacity(mx * my);
        let mut rhs = vec![0.0; mx * my];
        for j in 1..=my {
            for i in 1..=mx {
                let k = (j - 1) * mx + (i - 1);
                let mut row = vec![(k, -2.0 * (cx + cy))];
                for (di, dj, c) in [(-1i64, 0i64, cx), (1, 0, cx), (0, -1, cy), (0, 1, cy)] {
                    let (ii, jj) = ((i as i64 + di) as usize, (j as i64 + dj) as usize);
                    if grid.is_boundary(ii, jj) {
                        rhs[k] += c * bvals[grid.index(ii, jj)];
                    } else {
                        row.push(((jj - 1) * mx + (ii - 1), c));
                    }
                }
                rows.push(row);
            }
        }
        Ok(DiscreteProblem {
            rows,
            rhs,
            bandwidth: mx,
            scale: 1.0 / (2.0 * (cx + cy)),
            layout: Layout::Rect { grid, boundary: bvals },
        })
    }

    /// Nodes `r_i = i/(n−1)`; node `n−1` carries the boundary value and
    /// node 0 uses the symmetric closure `Δu(0) ≈ 4(u_1 − u_0)/h²`.
    fn radial(n: usize, boundary: f64) -> Result<Self, EllipticError> {
        if n < 3 {
            return Err(EllipticError::InvalidProblem(format!("radial grid needs n >= 3, got {n}")));
        }
        if !boundary.is_finite() {
            return Err(EllipticError::InvalidProblem("non-finite boundary value".into()));
        }
        let h = 1.0 / (n - 1) as f64;
        let c = 1.0 / (h * h);
        let m = n - 1;
        let mut rows = Vec::with_capacity(m);
        let mut rhs = vec![0.0; m];
        rows.push(vec![(0, -4.0 * c), (1, 4.0 * c)]);
        for i in 1..m {
            let r = i as f64 * h;
            let lo = c * (1.0 - h / (2.0 * r));
            let hi = c * (1.0 + h / (2.0 * r));
            let mut row = vec![(i - 1, lo), (i, -2.0 * c)];
            if i + 1 < m {
                row.push((i + 1, hi));
            } else {
                rhs[i] = hi * boundary;
            }
            rows.push(row);
        }
        if m == 1 {
            // only r = 0 is free
            rows[0] = vec![(0, -4.0 * c)];
            rhs[0] = 4.0 * c * boundary;
        }
        Ok(DiscreteProblem {
            rows,
            rhs,
            bandwidth: 1,
            scale: 1.0 / (2.0 * c),
            layout: Layout::Radial { n, boundary },
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Multiplier turning a raw residual into a dimensionless one
    /// (the inverse of the Laplacian diagonal magnitude).
    pub fn residual_scale(&self) -> f64 {
        self.scale
    }

    /// `L u + b`.
    pub fn linear_part(&self, u: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .zip(&self.rhs)
            .map(|(row, b)| row.iter().map(|&(j, c)| c * u[j]).sum::<f64>() + b)
            .collect()
    }

    /// `F(u) = L u + b − K e^{a u}`.
    pub fn residual(&self, u: &[f64], k: f64, a: f64) -> Vec<f64> {
        let mut r = self.linear_part(u);
        for (ri, &ui) in r.iter_mut().zip(u) {
            *ri -= k * (a * ui).exp();
        }
        r
    }

    /// `J = L − diag(aK e^{au})` in banded form.
    pub fn jacobian(&self, u: &[f64], k: f64, a: f64) -> BandMatrix {
        let mut m = BandMatrix::zeros(self.len(), self.bandwidth, self.bandwidth);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, c) in row {
                m.add(i, j, c);
            }
            m.add(i, i, -a * k * (a * u[i]).exp());
        }
        m
    }

    /// `J v` without forming the matrix.
    pub fn jacobian_apply(&self, u: &[f64], v: &[f64], k: f64, a: f64) -> Vec<f64> {
        self.rows
            .iter()
            .enumerate()
            .map(|(i, row)| row.iter().map(|&(j, c)| c * v[j]).sum::<f64>() - a * k * (a * u[i]).exp() * v[i])
            .collect()
    }

    /// Max-norm of a residual vector, scaled by [`residual_scale`](Self::residual_scale).
    pub fn scaled_norm(&self, r: &[f64]) -> f64 {
        self.scale * r.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Index of the unknown at (or nearest to) the domain centre.
    pub fn center_index(&self) -> usize {
        match &self.layout {
            Layout::Radial { .. } => 0,
            Layout::Rect { grid, .. } => {
                let mx = grid.nx - 2;
                let (i, j) = (grid.nx / 2, grid.ny / 2);
                (j - 1) * mx + (i - 1)
            }
        }
    }

    /// Solves `L u + b = 0`, the harmonic extension of the boundary data.
    pub fn harmonic_extension(&self) -> Result<Vec<f64>, EllipticError> {
        let zero = vec![0.0; self.len()];
        let lu = self.jacobian(&zero, 0.0, 1.0).factor()?;
        let minus_b: Vec<f64> = self.rhs.iter().map(|v| -v).collect();
        Ok(lu.solve(&minus_b))
    }

    /// Expands the unknown vector to a full field or radial profile.
    pub fn assemble(&self, u: &[f64]) -> Solution {
        match &self.layout {
            Layout::Rect { grid, boundary } => {
                let mut values = boundary.clone();
                let mx = grid.nx - 2;
                for (k, &v) in u.iter().enumerate() {
                    let (i, j) = (k % mx + 1, k / mx + 1);
                    values[grid.index(i, j)] = v;
                }
                Solution::Field(ScalarField2D { grid: *grid, values })
            }
            Layout::Radial { n, boundary } => {
                let h = 1.0 / (*n - 1) as f64;
                let r = (0..*n).map(|i| i as f64 * h).collect();
                let mut vals = u.to_vec();
                vals.push(*boundary);
                Solution::Radial(RadialProfile { r, u: vals })
            }
        }
    }

    /// Restricts a full solution to the unknowns (inverse of [`assemble`](Self::assemble)).
    pub fn unknowns_of(&self, s: &Solution) -> Result<Vec<f64>, EllipticError> {
        match (&self.layout, s) {
            (Layout::Rect { grid, .. }, Solution::Field(f)) if f.grid == *grid => {
                let mut out = Vec::with_capacity(self.len());
                for j in 1..grid.ny - 1 {
                    for i in 1..grid.nx - 1 {
                        out.push(f.at(i, j));
                    }
                }
                Ok(out)
            }
            (Layout::Radial { n, .. }, Solution::Radial(p)) if p.u.len() == *n => Ok(p.u[..n - 1].to_vec()),
            _ => Err(EllipticError::InvalidProblem("initial guess does not match the geometry".into())),
        }
    }
}
