//! Grid-refinement helpers.

use crate::fields::ScalarField2D;

/// Observed order `log(e_coarse / e_fine) / log(ratio)`.
pub fn observed_order(e_coarse: f64, e_fine: f64, ratio: f64) -> f64 {
    (e_coarse / e_fine).ln() / ratio.ln()
}

/// Orders between consecutive entries of a refinement sequence.
pub fn observed_orders(errors: &[f64], ratio: f64) -> Vec<f64> {
    errors.windows(2).map(|w| observed_order(w[0], w[1], ratio)).collect()
}

/// Richardson extrapolation of a quantity with leading error term `C·h^p`:
/// `q_fine + (q_fine − q_coarse) / (ratio^p − 1)`.
pub fn richardson(q_coarse: f64, q_fine: f64, ratio: f64, p: f64) -> f64 {
    q_fine + (q_fine - q_coarse) / (ratio.powf(p) - 1.0)
}

/// Repeated pointwise Richardson extrapolation on dyadically refined node
/// grids (`fields[k+1]` has twice the resolution of `fields[k]`, same
/// bounds), eliminating `h², h⁴, …` in turn. Returns the largest absolute
/// extrapolated value over the nodes of the coarsest grid, skipping `NaN`s.
pub fn richardson_nodes(fields: &[ScalarField2D]) -> Option<f64> {
    let coarse = fields.first()?.grid;
    let levels = fields.len();
    let mut worst: Option<f64> = None;
    for j in 0..coarse.ny {
        for i in 0..coarse.nx {
            let mut col: Vec<f64> = fields
                .iter()
                .enumerate()
                .map(|(k, f)| f.at(i << k, j << k))
                .collect();
            if col.iter().any(|v| v.is_nan()) {
                continue;
            }
            for lvl in 1..levels {
                let factor = 4f64.powi(lvl as i32);
                for k in (lvl..levels).rev() {
                    col[k] += (col[k] - col[k - 1]) / (factor - 1.0);
                }
            }
            let v = col[levels - 1].abs();
            worst = Some(worst.map_or(v, |w: f64| w.max(v)));
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let e: Vec<f64> = [0.1, 0.05, 0.025].iter().map(|h: &f64| 3.0 * h * h).collect();
        for p in observed_orders(&e, 2.0) {
            assert!((p - 2.0).abs() < 1e-12);
        }
        // q(h) = 1 + 3h²  extrapolates to 1
        let q = |h: f64| 1.0 + 3.0 * h * h;
        assert!((richardson(q(0.1), q(0.05), 2.0, 2.0) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn two_level_nodes_remove_h2_and_h4() {
        use crate::fields::Grid2D;
        // r(x, h) = x·(h² + h⁴) vanishes in the limit at every node
        let fields: Vec<ScalarField2D> = [5usize, 9, 17]
            .iter()
            .map(|&n| {
                let g = Grid2D::from_bounds(0.0, 0.0, 1.0, 1.0, n, n).unwrap();
                let h = g.hx;
                ScalarField2D::from_fn(g, |x, _| x * (h * h + h.powi(4)))
            })
            .collect();
        assert!(richardson_nodes(&fields).unwrap() < 1e-15);
    }
}
