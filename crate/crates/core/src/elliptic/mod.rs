//! Newton solver for the Dirichlet problem of `Δu = K e^{au}` on rectangles
//! and on the unit disk (radially), pseudo-arclength continuation of the
//! Gelfand problem `Δu + λe^u = 0`, and the boundary blow-up sequence.

mod blowup;
mod continuation;
mod newton;
mod operator;

pub use blowup::boundary_blowup_approx;
pub use continuation::{
    continue_branch, continue_branch_with, refine_on_branch, Branch, BranchPoint, BranchSide,
    ContinuationOptions, Fold,
};
pub use newton::{newton_solve, NewtonOptions};
pub use operator::DiscreteProblem;

use crate::expr::{EvalError, Expr};
use crate::fields::{FieldError, Grid2D, LiouvilleParams, ScalarField2D};
use crate::linalg::SingularMatrix;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    Rectangle(Grid2D),
    /// Unit disk, `n` radial nodes on `[0, 1]`.
    Disk { n: usize },
}

/// Nonlinearity of the problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Source {
    /// `Δu = K e^{au}`.
    Liouville(LiouvilleParams),
    /// `Δu + λ e^u = 0`, i.e. `K = −λ`, `a = 1`.
    Gelfand(f64),
}

impl Source {
    /// `(K, a)` in the `Δu = K e^{au}` form.
    pub fn k_a(&self) -> (f64, f64) {
        match *self {
            Source::Liouville(p) => (p.k(), p.a()),
            Source::Gelfand(lambda) => (-lambda, 1.0),
        }
    }
}

#[derive(Debug, Clone)]
pub enum Boundary {
    Constant(f64),
    /// Expression in `(x, y)`; rectangles only unless constant.
    Expr(Expr),
    /// Boundary nodes of a field on the problem grid; rectangles only.
    Samples(ScalarField2D),
}

#[derive(Debug, Clone)]
pub struct DirichletProblem {
    pub geometry: Geometry,
    pub source: Source,
    pub boundary: Boundary,
}

/// Nodal radial profile `u(r_i)` on `r_i = i/(n−1)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialProfile {
    pub r: Vec<f64>,
    pub u: Vec<f64>,
}

impl RadialProfile {
    pub fn center(&self) -> f64 {
        self.u[0]
    }

    /// Writes `r,u` rows with a header line.
    pub fn write_csv(&self, out: &mut (impl std::io::Write + ?Sized)) -> std::io::Result<()> {
        writeln!(out, "r,u")?;
        for (r, u) in self.r.iter().zip(&self.u) {
            writeln!(out, "{r},{u}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Solution {
    Field(ScalarField2D),
    Radial(RadialProfile),
}

impl Solution {
    /// Value at the domain centre (the radial origin, or the middle node).
    pub fn center(&self) -> f64 {
        match self {
            Solution::Radial(p) => p.center(),
            Solution::Field(f) => f.at(f.grid.nx / 2, f.grid.ny / 2),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub iterations: usize,
    /// Scaled max-residual of the returned iterate.
    pub final_residual: f64,
    pub converged: bool,
    /// Scaled max-residual before each iteration, and after the last.
    pub newton_history: Vec<f64>,
    /// Factor applied to the raw residual (`1/(2/hx² + 2/hy²)`).
    pub residual_scale: f64,
}

#[derive(Debug, Error)]
pub enum EllipticError {
    #[error("Newton did not converge after {} iterations (residual {:e})", .0.iterations, .0.final_residual)]
    NonConvergence(SolveReport),
    #[error("singular Jacobian ({0})")]
    SingularJacobian(#[from] SingularMatrix),
    #[error("continuation step failed at λ = {lambda}: {reason}")]
    StepFailure { lambda: f64, reason: String, partial: Box<Branch> },
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Solves the Dirichlet problem by damped Newton, starting from the
/// harmonic extension of the boundary data.
pub fn solve_dirichlet(p: &DirichletProblem) -> Result<(Solution, SolveReport), EllipticError> {
    solve_dirichlet_with(p, None, &NewtonOptions::default())
}

/// As [`solve_dirichlet`] with an optional initial guess and options.
pub fn solve_dirichlet_with(
    p: &DirichletProblem,
    guess: Option<&Solution>,
    opts: &NewtonOptions,
) -> Result<(Solution, SolveReport), EllipticError> {
    if let Source::Gelfand(l) = p.source {
        if !l.is_finite() {
            return Err(EllipticError::InvalidProblem(format!("λ must be finite, got {l}")));
        }
    }
    let dp = DiscreteProblem::new(&p.geometry, &p.boundary)?;
    let u0 = match guess {
        Some(s) => dp.unknowns_of(s)?,
        None => dp.harmonic_extension()?,
    };
    let (k, a) = p.source.k_a();
    let (u, report) = newton_solve(&dp, u0, k, a, opts)?;
    if !report.converged {
        return Err(EllipticError::NonConvergence(report));
    }
    Ok((dp.assemble(&u), report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closedform::{elliptic_exact, gelfand_radial, AnalyticSeed, SeedSign};
    use crate::convergence::observed_orders;

    fn max_err(sol: &Solution, exact: &ScalarField2D) -> f64 {
        let Solution::Field(f) = sol else { panic!("expected field") };
        f.values.iter().zip(&exact.values).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    #[test]
    fn manufactured_rectangle_is_second_order() {
        let p = LiouvilleParams::new(-1.0, 1.0).unwrap();
        let seed = AnalyticSeed::parse("z", SeedSign::Plus).unwrap();
        let errs: Vec<f64> = [17usize, 33, 65]
            .iter()
            .map(|&n| {
                let g = Grid2D::from_bounds(-0.4, -0.4, 0.4, 0.4, n, n).unwrap();
                let exact = elliptic_exact(&seed, p, g).unwrap();
                let prob = DirichletProblem {
                    geometry: Geometry::Rectangle(g),
                    source: Source::Liouville(p),
                    boundary: Boundary::Samples(exact.clone()),
                };
                let (sol, rep) = solve_dirichlet(&prob).unwrap();
                assert!(rep.converged && rep.final_residual <= 1e-10);
                max_err(&sol, &exact)
            })
            .collect();
        for o in observed_orders(&errs, 2.0) {
            assert!((1.8..=2.2).contains(&o), "order {o}, errors {errs:?}");
        }
    }

    #[test]
    fn small_square_converges_fast_from_zero() {
        let g = Grid2D::from_bounds(0.0, 0.0, 0.1, 0.1, 21, 21).unwrap();
        let prob = DirichletProblem {
            geometry: Geometry::Rectangle(g),
            source: Source::Liouville(LiouvilleParams::unit()),
            boundary: Boundary::Constant(0.0),
        };
        let (_, rep) = solve_dirichlet(&prob).unwrap();
        assert!(rep.iterations <= 6, "{rep:?}");
    }

    #[test]
    fn disk_with_k_minus_two_sits_at_the_discrete_fold() {
        // the radial discretisation folds at λ₀_h = 2 − O(h²), just short of
        // 2, so K = −2 itself has no discrete solution; the fold converges
        let exact = gelfand_radial(1.0).unwrap();
        let mut errs = Vec::new();
        for n in [65usize, 129, 257] {
            let prob = DirichletProblem {
                geometry: Geometry::Disk { n },
                source: Source::Liouville(LiouvilleParams::new(-2.0, 1.0).unwrap()),
                boundary: Boundary::Constant(0.0),
            };
            let guess = Solution::Radial(RadialProfile {
                r: (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
                u: (0..n).map(|i| exact.profile(i as f64 / (n - 1) as f64)).collect(),
            });
            let r = solve_dirichlet_with(&prob, Some(&guess), &NewtonOptions::default());
            assert!(matches!(r, Err(EllipticError::NonConvergence(_))));
            let fold = continue_branch(&Geometry::Disk { n }, 0.0, 200, 0.05).unwrap().fold.unwrap();
            assert!((fold.u0 - exact.u0).abs() < 1e-3);
            errs.push(exact.lambda - fold.lambda);
        }
        assert!(errs.iter().all(|&e| e > 0.0));
        for o in observed_orders(&errs, 2.0) {
            assert!((1.8..=2.2).contains(&o), "{errs:?}");
        }
    }

    #[test]
    fn disk_rejects_non_constant_boundary() {
        let prob = DirichletProblem {
            geometry: Geometry::Disk { n: 9 },
            source: Source::Gelfand(1.0),
            boundary: Boundary::Expr(Expr::parse("x + y", &["x", "y"]).unwrap()),
        };
        assert!(matches!(solve_dirichlet(&prob), Err(EllipticError::InvalidProblem(_))));
    }
}
