use super::{DiscreteProblem, EllipticError, SolveReport};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NewtonOptions {
    /// Convergence threshold on the scaled max-residual.
    pub tol: f64,
    pub max_iter: usize,
    /// Step halvings allowed in the backtracking line search.
    pub max_halvings: usize,
    /// Besides `tol`, the last update must be below `step_tol·(1 + max|u|)`.
    pub step_tol: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions { tol: 1e-10, max_iter: 50, max_halvings: 30, step_tol: 1e-11 }
    }
}

/// Damped Newton for `F(u) = L u + b − K e^{au} = 0`. Returns the last
/// iterate and its report; a non-converged report is not an error here.
///
/// The residual is scaled by `1/(2/hx² + 2/hy²)`, so on fine grids a small
/// scaled residual alone does not pin the solution; `step_tol` does.
pub fn newton_solve(
    dp: &DiscreteProblem,
    mut u: Vec<f64>,
    k: f64,
    a: f64,
    opts: &NewtonOptions,
) -> Result<(Vec<f64>, SolveReport), EllipticError> {
    let mut f = dp.residual(&u, k, a);
    let mut res = dp.scaled_norm(&f);
    let mut history = vec![res];
    let mut iterations = 0;
    let mut last_step = if res == 0.0 { 0.0 } else { f64::INFINITY };
    loop {
        let size = u.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if res <= opts.tol && last_step <= opts.step_tol * (1.0 + size) {
            break;
        }
        if !res.is_finite() || iterations >= opts.max_iter {
            break;
        }
        let lu = dp.jacobian(&u, k, a).factor()?;
        let minus_f: Vec<f64> = f.iter().map(|v| -v).collect();
        let du = lu.solve(&minus_f);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let trial: Vec<f64> = u.iter().zip(&du).map(|(x, d)| x + t * d).collect();
            let ft = dp.residual(&trial, k, a);
            let rt = dp.scaled_norm(&ft);
            if rt < res || (rt <= opts.tol && rt <= res) {
                last_step = t * du.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
                accepted = Some((trial, ft, rt));
                break;
            }
            t *= 0.5;
        }
        iterations += 1;
        match accepted {
            Some((nu, nf, nr)) => {
                u = nu;
                f = nf;
                res = nr;
                history.push(res);
            }
            None => break,
        }
    }
    let report = SolveReport {
        iterations,
        final_residual: res,
        converged: res <= opts.tol,
        newton_history: history,
        residual_scale: dp.residual_scale(),
    };
    Ok((u, report))
}
