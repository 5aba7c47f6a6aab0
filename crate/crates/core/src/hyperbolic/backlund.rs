//! The Bäcklund pair
//!
//! ```text
//! u_x =  w_x + A·e^{(u+w)/2}
//! u_y = −w_y + (2/A)·e^{(u−w)/2}
//! ```
//!
//! is compatible exactly when `w_xy = 0`, and then `u_xy = e^u`.

use super::HyperbolicError;
use crate::expr::{Expr, ParseError};
use crate::fields::{Grid2D, ScalarField2D};
use rayon::prelude::*;

/// `w(x, y) = phi(x) + psi(y)`.
#[derive(Debug, Clone)]
pub struct WaveSolution {
    pub phi: Expr,
    pub psi: Expr,
}

impl WaveSolution {
    /// Parses `phi` in `x` and `psi` in `y`.
    pub fn parse(phi: &str, psi: &str) -> Result<Self, ParseError> {
        Ok(WaveSolution { phi: Expr::parse(phi, &["x"])?, psi: Expr::parse(psi, &["y"])? })
    }

    /// `(w, w_x)` along `x` (the `psi` part added by the caller).
    fn phi_d(&self, x: f64) -> Result<(f64, f64), HyperbolicError> {
        let r = self.phi.eval_dual(&[x], 0)?;
        Ok((r.value, r.d1))
    }

    fn psi_d(&self, y: f64) -> Result<(f64, f64), HyperbolicError> {
        let r = self.psi.eval_dual(&[y], 0)?;
        Ok((r.value, r.d1))
    }
}

/// Which edge is integrated first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PathOrder {
    /// Bottom edge in `x`, then every column in `y`.
    #[default]
    XThenY,
    /// Left edge in `y`, then every row in `x`.
    YThenX,
}

const OVERFLOW: f64 = 700.0;

/// One classical RK4 step of `du/dt = rhs(t, u)`.
fn rk4(
    t: f64,
    u: f64,
    h: f64,
    rhs: &impl Fn(f64, f64) -> Result<f64, HyperbolicError>,
) -> Result<Option<f64>, HyperbolicError> {
    let ok = |v: f64| v.is_finite() && v < OVERFLOW;
    let k1 = rhs(t, u)?;
    let u2 = u + 0.5 * h * k1;
    if !ok(u2) {
        return Ok(None);
    }
    let k2 = rhs(t + 0.5 * h, u2)?;
    let u3 = u + 0.5 * h * k2;
    if !ok(u3) {
        return Ok(None);
    }
    let k3 = rhs(t + 0.5 * h, u3)?;
    let u4 = u + h * k3;
    if !ok(u4) {
        return Ok(None);
    }
    let k4 = rhs(t + h, u4)?;
    let next = u + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    Ok(ok(next).then_some(next))
}

/// Integrates the Bäcklund pair from `u(x0, y0) = u_corner` over `grid`
/// with RK4, one step per grid spacing.
pub fn backlund(
    w: &WaveSolution,
    bt_a: f64,
    u_corner: f64,
    grid: Grid2D,
    order: PathOrder,
) -> Result<ScalarField2D, HyperbolicError> {
    if !(bt_a != 0.0 && bt_a.is_finite()) {
        return Err(HyperbolicError::Invalid(format!("Bäcklund constant must be finite and nonzero, got {bt_a}")));
    }
    if !u_corner.is_finite() {
        return Err(HyperbolicError::Invalid("corner value must be finite".into()));
    }
    // u_x at fixed y, given psi(y)
    let x_rhs = |psi_y: f64| {
        move |x: f64, u: f64| -> Result<f64, HyperbolicError> {
            let (ph, phx) = w.phi_d(x)?;
            Ok(phx + bt_a * (0.5 * (u + ph + psi_y)).exp())
        }
    };
    // u_y at fixed x, given phi(x)
    let y_rhs = |phi_x: f64| {
        move |y: f64, u: f64| -> Result<f64, HyperbolicError> {
            let (ps, psy) = w.psi_d(y)?;
            Ok(-psy + 2.0 / bt_a * (0.5 * (u - phi_x - ps)).exp())
        }
    };
    let line_x = |j: usize, start: f64| -> Result<Vec<f64>, HyperbolicError> {
        let y = grid.y(j);
        let rhs = x_rhs(w.psi_d(y)?.0);
        let mut out = Vec::with_capacity(grid.nx);
        out.push(start);
        for i in 1..grid.nx {
            let (x, u) = (grid.x(i - 1), out[i - 1]);
            let next = rk4(x, u, grid.hx, &rhs)?
                .ok_or(HyperbolicError::OdeOverflow { x0: x, y0: y, x1: grid.x(i), y1: y })?;
            out.push(next);
        }
        Ok(out)
    };
    let line_y = |i: usize, start: f64| -> Result<Vec<f64>, HyperbolicError> {
        let x = grid.x(i);
        let rhs = y_rhs(w.phi_d(x)?.0);
        let mut out = Vec::with_capacity(grid.ny);
        out.push(start);
        for j in 1..grid.ny {
            let (y, u) = (grid.y(j - 1), out[j - 1]);
            let next = rk4(y, u, grid.hy, &rhs)?
                .ok_or(HyperbolicError::OdeOverflow { x0: x, y0: y, x1: x, y1: grid.y(j) })?;
            out.push(next);
        }
        Ok(out)
    };
    let mut values = vec![0.0; grid.len()];
    match order {
        PathOrder::XThenY => {
            let bottom = line_x(0, u_corner)?;
            let cols: Vec<Vec<f64>> =
                (0..grid.nx).into_par_iter().map(|i| line_y(i, bottom[i])).collect::<Result<_, _>>()?;
            for (i, col) in cols.iter().enumerate() {
                for (j, v) in col.iter().enumerate() {
                    values[grid.index(i, j)] = *v;
                }
            }
        }
        PathOrder::YThenX => {
            let left = line_y(0, u_corner)?;
            let rows: Vec<Vec<f64>> =
                (0..grid.ny).into_par_iter().map(|j| line_x(j, left[j])).collect::<Result<_, _>>()?;
            for (j, row) in rows.iter().enumerate() {
                values[j * grid.nx..(j + 1) * grid.nx].copy_from_slice(row);
            }
        }
    }
    Ok(ScalarField2D { grid, values })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact(x: f64, y: f64) -> f64 {
        -2.0 * (1.0 - x - y / 2.0).ln()
    }

    #[test]
    fn constant_wave_matches_closed_form() {
        let w = WaveSolution::parse("0", "0").unwrap();
        let g = Grid2D::new(65, 129, 0.0, 0.0, 1.0 / 256.0, 1.0 / 256.0).unwrap();
        for order in [PathOrder::XThenY, PathOrder::YThenX] {
            let u = backlund(&w, 2.0, 0.0, g, order).unwrap();
            for j in 0..g.ny {
                for i in 0..g.nx {
                    assert!((u.at(i, j) - exact(g.x(i), g.y(j))).abs() <= 1e-8);
                }
            }
            assert!((u.at(64, 128) - 4f64.ln()).abs() <= 1e-8);
        }
    }

    #[test]
    fn overflow_is_reported() {
        let w = WaveSolution::parse("0", "0").unwrap();
        // 1 − x − y/2 vanishes at x = 1 on the bottom edge
        let g = Grid2D::from_bounds(0.0, 0.0, 1.5, 0.5, 31, 11).unwrap();
        assert!(matches!(backlund(&w, 2.0, 0.0, g, PathOrder::XThenY), Err(HyperbolicError::OdeOverflow { .. })));
        assert!(backlund(&w, 0.0, 0.0, g, PathOrder::XThenY).is_err());
    }
}
