//! Pseudo-arclength continuation of `Δu + λe^u = 0`, `u = 0` on the
//! boundary, in the unknowns `(u, λ)`.
//!
//! Inner products weight the `u` block by `1/N` (N unknowns) so that the
//! arclength is insensitive to the grid size.

use super::{newton_solve, Boundary, DiscreteProblem, EllipticError, Geometry, NewtonOptions, Solution};
use crate::linalg::{BandLu, BandMatrix};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchPoint {
    pub lambda: f64,
    /// Values at the free nodes (boundary nodes are zero).
    pub u: Vec<f64>,
    /// Value at the domain centre.
    pub u0: f64,
    /// Pseudo-arclength from the first point.
    pub s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fold {
    pub lambda: f64,
    pub u0: f64,
    pub s: f64,
    /// The fold lies between `points[index]` and `points[index + 1]`.
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub geometry: Geometry,
    pub points: Vec<BranchPoint>,
    pub fold: Option<Fold>,
}

impl Branch {
    /// Full solution (boundary included) at `points[idx]`.
    pub fn solution(&self, idx: usize) -> Result<Solution, EllipticError> {
        let dp = DiscreteProblem::new(&self.geometry, &Boundary::Constant(0.0))?;
        Ok(dp.assemble(&self.points[idx].u))
    }

    /// Writes `s,lambda,u0` rows with a header line.
    pub fn write_csv(&self, out: &mut (impl std::io::Write + ?Sized)) -> std::io::Result<()> {
        writeln!(out, "s,lambda,u0")?;
        for p in &self.points {
            writeln!(out, "{},{},{}", p.s, p.lambda, p.u0)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BranchSide {
    /// Before the fold (small solutions).
    Lower,
    /// After the fold.
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContinuationOptions {
    pub ds_min: f64,
    pub ds_max: f64,
    /// Consecutive step halvings before giving up.
    pub max_halvings: usize,
    /// Corrector tolerance and iteration cap.
    pub newton: NewtonOptions,
    /// Fold bisection stops once the bracketing λ values differ by at most this.
    pub fold_tol: f64,
    /// Continuation stops once the centre value exceeds this.
    pub u0_max: f64,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        ContinuationOptions {
            ds_min: 1e-4,
            ds_max: 0.1,
            max_halvings: 10,
            newton: NewtonOptions { max_iter: 10, max_halvings: 0, ..NewtonOptions::default() },
            fold_tol: 1e-6,
            u0_max: 10.0,
        }
    }
}

#[derive(Debug, Clone)]
struct State {
    u: Vec<f64>,
    lambda: f64,
}

struct Ctx<'a> {
    dp: &'a DiscreteProblem,
    opts: &'a ContinuationOptions,
    weight: f64,
}

impl Ctx<'_> {
    fn dot(&self, a: &State, b: &State) -> f64 {
        self.weight * a.u.iter().zip(&b.u).map(|(x, y)| x * y).sum::<f64>() + a.lambda * b.lambda
    }

    fn normalized(&self, mut t: State) -> State {
        let n = self.dot(&t, &t).sqrt();
        t.u.iter_mut().for_each(|v| *v /= n);
        t.lambda /= n;
        t
    }

    fn residual(&self, x: &State) -> Vec<f64> {
        self.dp.residual(&x.u, -x.lambda, 1.0)
    }

    fn f_lambda(x: &State) -> Vec<f64> {
        x.u.iter().map(|v| v.exp()).collect()
    }

    /// Solves `[J F_λ; cᵀ] [du; dλ] = [r1; r2]` by block elimination with one
    /// step of iterative refinement. `c` is given unweighted.
    fn bordered(&self, x: &State, c: &State, r1: &[f64], r2: f64) -> Result<State, EllipticError> {
        let jm: BandMatrix = self.dp.jacobian(&x.u, -x.lambda, 1.0);
        let lu: BandLu = jm.clone().factor()?;
        let fl = Self::f_lambda(x);
        let b = lu.solve(&fl);
        let cw: Vec<f64> = c.u.iter().map(|v| v * self.weight).collect();
        let cdot = |v: &[f64]| cw.iter().zip(v).map(|(p, q)| p * q).sum::<f64>();
        let denom = c.lambda - cdot(&b);
        let inner = |r1: &[f64], r2: f64| -> State {
            let a = lu.solve(r1);
            let dl = (r2 - cdot(&a)) / denom;
            State { u: a.iter().zip(&b).map(|(ai, bi)| ai - bi * dl).collect(), lambda: dl }
        };
        let mut z = inner(r1, r2);
        let jz = jm.mul_vec(&z.u);
        let e1: Vec<f64> = (0..r1.len()).map(|i| r1[i] - jz[i] - fl[i] * z.lambda).collect();
        let e2 = r2 - cdot(&z.u) - c.lambda * z.lambda;
        let dz = inner(&e1, e2);
        z.u.iter_mut().zip(&dz.u).for_each(|(a, d)| *a += d);
        z.lambda += dz.lambda;
        Ok(z)
    }

    /// Unit tangent at `x`, oriented so that `⟨t, dir⟩ > 0`.
    fn tangent(&self, x: &State, dir: &State) -> Result<State, EllipticError> {
        let zeros = vec![0.0; x.u.len()];
        Ok(self.normalized(self.bordered(x, dir, &zeros, 1.0)?))
    }

    /// Corrects `pred` onto `F = 0` within the hyperplane `⟨dir, x − anchor⟩ = sigma`.
    fn correct(&self, pred: State, anchor: &State, dir: &State, sigma: f64) -> Option<(State, usize)> {
        let mut x = pred;
        let nopt = &self.opts.newton;
        let mut last_step = f64::INFINITY;
        for it in 0..=nopt.max_iter {
            let f = self.residual(&x);
            let diff = State {
                u: x.u.iter().zip(&anchor.u).map(|(a, b)| a - b).collect(),
                lambda: x.lambda - anchor.lambda,
            };
            let n = self.dot(dir, &diff) - sigma;
            let res = self.dp.scaled_norm(&f);
            if !res.is_finite() {
                return None;
            }
            let size = x.u.iter().fold(x.lambda.abs(), |m, v| m.max(v.abs()));
            if res <= nopt.tol && n.abs() <= 1e-12 && last_step <= nopt.step_tol * (1.0 + size) {
                return Some((x, it));
            }
            if it == nopt.max_iter {
                break;
            }
            let minus_f: Vec<f64> = f.iter().map(|v| -v).collect();
            let d = self.bordered(&x, dir, &minus_f, -n).ok()?;
            x.u.iter_mut().zip(&d.u).for_each(|(a, b)| *a += b);
            x.lambda += d.lambda;
            last_step = d.u.iter().fold(d.lambda.abs(), |m, v| m.max(v.abs()));
        }
        None
    }

    fn point(&self, x: &State, s: f64) -> BranchPoint {
        BranchPoint { lambda: x.lambda, u0: x.u[self.dp.center_index()], u: x.u.clone(), s }
    }
}

fn lerp(a: &State, b: &State, t: f64) -> State {
    State {
        u: a.u.iter().zip(&b.u).map(|(x, y)| x + t * (y - x)).collect(),
        lambda: a.lambda + t * (b.lambda - a.lambda),
    }
}

/// Continues the Gelfand branch from `lambda_start` with default options.
pub fn continue_branch(
    geometry: &Geometry,
    lambda_start: f64,
    max_steps: usize,
    ds: f64,
) -> Result<Branch, EllipticError> {
    continue_branch_with(geometry, lambda_start, max_steps, ds, &ContinuationOptions::default())
}

/// Pseudo-arclength continuation with a secant predictor. Stops after
/// `max_steps` steps, when λ turns negative, or when the centre value
/// exceeds `opts.u0_max`.
pub fn continue_branch_with(
    geometry: &Geometry,
    lambda_start: f64,
    max_steps: usize,
    ds: f64,
    opts: &ContinuationOptions,
) -> Result<Branch, EllipticError> {
    if !(lambda_start >= 0.0 && lambda_start.is_finite()) {
        return Err(EllipticError::InvalidProblem(format!("λ_start must be finite and ≥ 0, got {lambda_start}")));
    }
    if !(ds > 0.0 && ds.is_finite()) {
        return Err(EllipticError::InvalidProblem(format!("ds must be positive, got {ds}")));
    }
    let dp = DiscreteProblem::new(geometry, &Boundary::Constant(0.0))?;
    let ctx = Ctx { dp: &dp, opts, weight: 1.0 / dp.len() as f64 };

    let full = NewtonOptions { tol: opts.newton.tol, ..NewtonOptions::default() };
    let (u, rep) = newton_solve(&dp, vec![0.0; dp.len()], -lambda_start, 1.0, &full)?;
    if !rep.converged {
        return Err(EllipticError::NonConvergence(rep));
    }
    let mut x = State { u, lambda: lambda_start };
    let mut branch = Branch { geometry: geometry.clone(), points: vec![ctx.point(&x, 0.0)], fold: None };

    // first tangent: J z = −F_λ, t = (z, 1)
    let up = State { u: vec![0.0; dp.len()], lambda: 1.0 };
    let mut t = ctx.tangent(&x, &up)?;
    let mut prev: Option<State> = None;
    let mut ds = ds.clamp(opts.ds_min, opts.ds_max);
    let mut s = 0.0;

    for _ in 0..max_steps {
        let dir = match &prev {
            Some(p) => ctx.normalized(State {
                u: x.u.iter().zip(&p.u).map(|(a, b)| a - b).collect(),
                lambda: x.lambda - p.lambda,
            }),
            None => t.clone(),
        };
        let mut halvings = 0;
        let (next, iters) = loop {
            let pred = State {
                u: x.u.iter().zip(&dir.u).map(|(a, d)| a + ds * d).collect(),
                lambda: x.lambda + ds * dir.lambda,
            };
            if let Some(r) = ctx.correct(pred, &x, &dir, ds) {
                break r;
            }
            halvings += 1;
            ds *= 0.5;
            if halvings > opts.max_halvings || ds < opts.ds_min {
                return Err(EllipticError::StepFailure {
                    lambda: x.lambda,
                    reason: format!("corrector failed after {} step halvings", halvings),
                    partial: Box::new(branch),
                });
            }
        };
        let t_next = ctx.tangent(&next, &dir)?;
        if branch.fold.is_none() && t.lambda * t_next.lambda <= 0.0 && t.lambda != 0.0 {
            branch.fold = Some(locate_fold(&ctx, &x, &next, &dir, &t, ds, s, branch.points.len() - 1)?);
        }
        s += ds;
        branch.points.push(ctx.point(&next, s));
        prev = Some(std::mem::replace(&mut x, next));
        t = t_next;
        if iters <= 3 {
            ds = (ds * 1.5).min(opts.ds_max);
        }
        if x.lambda < 0.0 || x.u[dp.center_index()] > opts.u0_max {
            break;
        }
    }
    Ok(branch)
}

/// Bisection on the arclength parameter between `lo_state` (σ = 0) and
/// `hi_state` (σ = ds) for the sign change of the tangent's λ component.
#[allow(clippy::too_many_arguments)]
fn locate_fold(
    ctx: &Ctx,
    lo_state: &State,
    hi_state: &State,
    dir: &State,
    t_lo: &State,
    ds: f64,
    s0: f64,
    index: usize,
) -> Result<Fold, EllipticError> {
    let anchor = lo_state.clone();
    let (mut lo, mut hi) = (0.0, ds);
    let (mut x_lo, mut x_hi) = (lo_state.clone(), hi_state.clone());
    let sign = t_lo.lambda.signum();
    for _ in 0..200 {
        if (x_hi.lambda - x_lo.lambda).abs() <= ctx.opts.fold_tol && hi - lo <= 1e-6 * ds {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let pred = lerp(&x_lo, &x_hi, (mid - lo) / (hi - lo));
        let Some((xm, _)) = ctx.correct(pred, &anchor, dir, mid) else {
            break;
        };
        let tm = ctx.tangent(&xm, dir)?;
        if tm.lambda * sign > 0.0 {
            lo = mid;
            x_lo = xm;
        } else {
            hi = mid;
            x_hi = xm;
        }
    }
    let best = if x_lo.lambda * sign >= x_hi.lambda * sign { (&x_lo, lo) } else { (&x_hi, hi) };
    Ok(Fold { lambda: best.0.lambda, u0: best.0.u[ctx.dp.center_index()], s: s0 + best.1, index })
}

/// Solves at fixed `lambda` on the chosen side of the fold, starting from a
/// guess interpolated between the bracketing branch points.
pub fn refine_on_branch(branch: &Branch, lambda: f64, side: BranchSide) -> Result<BranchPoint, EllipticError> {
    let pts = &branch.points;
    let range = match (side, branch.fold) {
        (BranchSide::Lower, Some(f)) => 0..f.index + 1,
        (BranchSide::Lower, None) => 0..pts.len(),
        (BranchSide::Upper, Some(f)) => f.index..pts.len(),
        (BranchSide::Upper, None) => {
            return Err(EllipticError::InvalidProblem("branch has no fold, so no upper side".into()))
        }
    };
    let seg = &pts[range];
    let pair = seg.windows(2).find(|w| (w[0].lambda - lambda) * (w[1].lambda - lambda) <= 0.0);
    let Some(w) = pair else {
        return Err(EllipticError::InvalidProblem(format!("λ = {lambda} not bracketed on the {side:?} branch")));
    };
    let t = if w[1].lambda == w[0].lambda { 0.0 } else { (lambda - w[0].lambda) / (w[1].lambda - w[0].lambda) };
    let guess: Vec<f64> = w[0].u.iter().zip(&w[1].u).map(|(a, b)| a + t * (b - a)).collect();
    let dp = DiscreteProblem::new(&branch.geometry, &Boundary::Constant(0.0))?;
    let (u, rep) = newton_solve(&dp, guess, -lambda, 1.0, &NewtonOptions::default())?;
    if !rep.converged {
        return Err(EllipticError::NonConvergence(rep));
    }
    Ok(BranchPoint { lambda, u0: u[dp.center_index()], u, s: w[0].s + t * (w[1].s - w[0].s) })
}
