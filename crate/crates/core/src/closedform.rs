//! Exact solutions of the Liouville equations.
//!
//! * two-function solution of `u_xy = K e^{au}`:
//!   `u = (1/a)·ln(2 f'(x) g'(y) / (aK (f(x)+g(y))²))`
//! * one-analytic-function solution of `Δu = K e^{au}`:
//!   `u = (1/a)·[ln(8|F'(z)|² / (1 ∓ |F(z)|²)²) − ln|aK|]`, `z = x + iy`,
//!   with `−` when `aK > 0` and `+` when `aK < 0`
//! * the radial Gelfand family on the unit disk and the boundary blow-up
//!   solution `ln(8 / (1 − r²)²)` of `Δu = e^u`
//!
//! The complex form `u_{zz̄} = e^u` is `Δu = 4e^u` (since `Δ = 4∂_z∂_z̄`),
//! i.e. `K = 4, a = 1` here.

use crate::expr::{EvalError, Expr};
use crate::fields::{check_positive, FieldError, Grid2D, LiouvilleParams, ScalarField2D};
use num_complex::Complex64;
use rayon::prelude::*;
use std::io::Write;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClosedFormError {
    #[error("f(x) + g(y) vanishes at node ({i}, {j})")]
    SingularNode { i: usize, j: usize },
    #[error("a·K·f'(x)·g'(y) <= 0 at node ({i}, {j}); the solution is not real there")]
    SignError { i: usize, j: usize },
    #[error("F'(z) = 0 at node ({i}, {j})")]
    SeedDegenerate { i: usize, j: usize },
    #[error("|F(z)| >= 1 at node ({i}, {j}) with the minus denominator")]
    DomainViolation { i: usize, j: usize },
    #[error("denominator sign {sign:?} does not match sign(a·K) = {sign_ak}")]
    SignMismatch { sign: SeedSign, sign_ak: f64 },
    #[error("b must be positive, got {0}")]
    NonPositiveB(f64),
    #[error("g' changes sign on the search interval near y = {y}")]
    NonMonotoneG { y: f64 },
    #[error("expression must have exactly one variable: `{0}`")]
    NotUnivariate(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// The two arbitrary functions `f(x)`, `g(y)` of the hyperbolic solution.
#[derive(Debug, Clone)]
pub struct CharacteristicPair {
    pub f: Expr,
    pub g: Expr,
}

fn univariate(e: &Expr) -> Result<(), ClosedFormError> {
    if e.vars().len() == 1 {
        Ok(())
    } else {
        Err(ClosedFormError::NotUnivariate(e.to_string()))
    }
}

impl CharacteristicPair {
    pub fn new(f: Expr, g: Expr) -> Result<Self, ClosedFormError> {
        univariate(&f)?;
        univariate(&g)?;
        Ok(CharacteristicPair { f, g })
    }

    /// Parses `f` in `x` and `g` in `y`.
    pub fn parse(f: &str, g: &str) -> Result<Self, crate::expr::ParseError> {
        Ok(CharacteristicPair {
            f: Expr::parse(f, &["x"])?,
            g: Expr::parse(g, &["y"])?,
        })
    }

    fn fg(&self, x: f64, y: f64) -> Result<((f64, f64), (f64, f64)), EvalError> {
        let f = self.f.eval_dual(&[x], 0)?;
        let g = self.g.eval_dual(&[y], 0)?;
        Ok(((f.value, f.d1), (g.value, g.d1)))
    }

    /// Pointwise value of the exact solution; `None` where it is not real
    /// or singular.
    pub fn u_at(&self, x: f64, y: f64, p: LiouvilleParams) -> Result<Option<f64>, EvalError> {
        let ((f, fp), (g, gp)) = self.fg(x, y)?;
        Ok(hyperbolic_value(f, fp, g, gp, p).ok())
    }
}

enum NodeFault {
    Singular,
    Sign,
}

#[inline]
fn hyperbolic_value(f: f64, fp: f64, g: f64, gp: f64, p: LiouvilleParams) -> Result<f64, NodeFault> {
    let s = f + g;
    if s.abs() <= 8.0 * f64::EPSILON * (f.abs() + g.abs()) {
        return Err(NodeFault::Singular);
    }
    let ak = p.a() * p.k();
    let num = 2.0 * fp * gp;
    if !(ak * num > 0.0) {
        return Err(NodeFault::Sign);
    }
    Ok((num / (ak * s * s)).ln() / p.a())
}

/// Samples the two-function solution of `u_xy = K e^{au}` on `grid`.
pub fn hyperbolic_exact(
    cp: &CharacteristicPair,
    p: LiouvilleParams,
    grid: Grid2D,
) -> Result<ScalarField2D, ClosedFormError> {
    let fx: Vec<(f64, f64)> = (0..grid.nx)
        .map(|i| cp.f.eval_dual(&[grid.x(i)], 0).map(|r| (r.value, r.d1)))
        .collect::<Result<_, _>>()?;
    let gy: Vec<(f64, f64)> = (0..grid.ny)
        .map(|j| cp.g.eval_dual(&[grid.y(j)], 0).map(|r| (r.value, r.d1)))
        .collect::<Result<_, _>>()?;
    let mut values = vec![0.0; grid.len()];
    for (j, row) in values.chunks_mut(grid.nx).enumerate() {
        let (g, gp) = gy[j];
        for (i, v) in row.iter_mut().enumerate() {
            let (f, fp) = fx[i];
            *v = hyperbolic_value(f, fp, g, gp, p).map_err(|e| match e {
                NodeFault::Singular => ClosedFormError::SingularNode { i, j },
                NodeFault::Sign => ClosedFormError::SignError { i, j },
            })?;
        }
    }
    Ok(ScalarField2D { grid, values })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum SeedSign {
    /// `(1 + |F|²)²`, for `aK < 0`
    Plus,
    /// `(1 − |F|²)²`, for `aK > 0`; needs `|F| < 1`
    Minus,
}

impl SeedSign {
    pub fn for_params(p: LiouvilleParams) -> SeedSign {
        if p.a() * p.k() > 0.0 {
            SeedSign::Minus
        } else {
            SeedSign::Plus
        }
    }
}

/// An analytic function `F(z)` generating real solutions of `Δu = K e^{au}`.
#[derive(Debug, Clone)]
pub struct AnalyticSeed {
    pub f: Expr,
    pub sign: SeedSign,
}

impl AnalyticSeed {
    pub fn new(f: Expr, sign: SeedSign) -> Result<Self, ClosedFormError> {
        univariate(&f)?;
        Ok(AnalyticSeed { f, sign })
    }

    pub fn parse(src: &str, sign: SeedSign) -> Result<Self, crate::expr::ParseError> {
        Ok(AnalyticSeed { f: Expr::parse(src, &["z"])?, sign })
    }
}

enum SeedFault {
    Degenerate,
    Domain,
    Eval(EvalError),
}

fn elliptic_value(seed: &AnalyticSeed, x: f64, y: f64, shift: f64, a: f64) -> Result<f64, SeedFault> {
    let (f, fp) = seed.f.eval_complex(Complex64::new(x, y)).map_err(SeedFault::Eval)?;
    let fp2 = fp.norm_sqr();
    if fp2 == 0.0 {
        return Err(SeedFault::Degenerate);
    }
    let m = f.norm_sqr();
    let d = match seed.sign {
        SeedSign::Plus => 1.0 + m,
        SeedSign::Minus => {
            if m >= 1.0 {
                return Err(SeedFault::Domain);
            }
            1.0 - m
        }
    };
    Ok(((8.0 * fp2 / (d * d)).ln() - shift) / a)
}

/// Samples the one-seed solution of `Δu = K e^{au}` on `grid`.
pub fn elliptic_exact(
    seed: &AnalyticSeed,
    p: LiouvilleParams,
    grid: Grid2D,
) -> Result<ScalarField2D, ClosedFormError> {
    let ak = p.a() * p.k();
    if SeedSign::for_params(p) != seed.sign {
        return Err(ClosedFormError::SignMismatch { sign: seed.sign, sign_ak: ak.signum() });
    }
    let shift = ak.abs().ln();
    let rows: Vec<Result<Vec<f64>, ClosedFormError>> = (0..grid.ny)
        .into_par_iter()
        .map(|j| {
            (0..grid.nx)
                .map(|i| {
                    elliptic_value(seed, grid.x(i), grid.y(j), shift, p.a()).map_err(|e| match e {
                        SeedFault::Degenerate => ClosedFormError::SeedDegenerate { i, j },
                        SeedFault::Domain => ClosedFormError::DomainViolation { i, j },
                        SeedFault::Eval(e) => ClosedFormError::Eval(e),
                    })
                })
                .collect()
        })
        .collect();
    let mut values = Vec::with_capacity(grid.len());
    for row in rows {
        values.extend(row?);
    }
    Ok(ScalarField2D { grid, values })
}

/// One member of the exact radial family of `Δu + λe^u = 0` on the unit
/// disk with `u = 0` on the boundary:
/// `λ = 8b/(1+b)²`, `u(r) = ln(8b / (λ(1 + b r²)²))`.
///
/// `b` and `1/b` give the same `λ`; `b < 1` is the lower branch, `b > 1`
/// the upper one, and `b = 1` the fold at `λ = 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GelfandRadial {
    pub b: f64,
    pub lambda: f64,
    pub u0: f64,
}

impl GelfandRadial {
    pub fn profile(&self, r: f64) -> f64 {
        let d = 1.0 + self.b * r * r;
        (8.0 * self.b / (self.lambda * d * d)).ln()
    }

    /// The lower (`b < 1`) or upper (`b > 1`) member with the given `λ ∈ (0, 2]`.
    pub fn at_lambda(lambda: f64, upper: bool) -> Option<GelfandRadial> {
        if !(lambda > 0.0 && lambda <= 2.0) {
            return None;
        }
        // λ(1+b)² = 8b  ⇔  λb² + (2λ − 8)b + λ = 0
        let half = (4.0 - lambda) / lambda;
        let disc = (half * half - 1.0).max(0.0).sqrt();
        // the two roots multiply to one; take the stable one first
        let big = half + disc;
        let b = if upper { big } else { 1.0 / big };
        gelfand_radial(b).ok()
    }
}

pub fn gelfand_radial(b: f64) -> Result<GelfandRadial, ClosedFormError> {
    if !(b > 0.0 && b.is_finite()) {
        return Err(ClosedFormError::NonPositiveB(b));
    }
    let lambda = 8.0 * b / ((1.0 + b) * (1.0 + b));
    // u0 = ln(8b/λ) = ln((1+b)²)
    let u0 = 2.0 * b.ln_1p();
    Ok(GelfandRadial { b, lambda, u0 })
}

/// `ln(8 / (1 − r²)²)`, the solution of `Δu = e^u` on the unit disk that
/// blows up on the boundary. `+∞` for `r ≥ 1`.
pub fn boundary_blowup_radial(r: f64) -> f64 {
    let d = 1.0 - r * r;
    if d <= 0.0 {
        return f64::INFINITY;
    }
    (8.0 / (d * d)).ln()
}

/// Samples [`boundary_blowup_radial`]; nodes on or outside the unit circle
/// are `NaN`.
pub fn boundary_blowup_exact(grid: Grid2D) -> ScalarField2D {
    ScalarField2D::from_fn(grid, |x, y| {
        let r2 = x * x + y * y;
        if r2 < 1.0 {
            boundary_blowup_radial(r2.sqrt())
        } else {
            f64::NAN
        }
    })
}

/// Singular set `f(x) + g(y) = 0` of the two-function solution, one root
/// (or none) per `x` sample.
#[derive(Debug, Clone, PartialEq)]
pub struct BlowupCurve {
    pub samples: Vec<(f64, Option<f64>)>,
    pub tol: f64,
}

impl BlowupCurve {
    /// Two-column `x,y` CSV with `NA` where there is no root.
    pub fn write_csv(&self, out: &mut (impl Write + ?Sized)) -> std::io::Result<()> {
        writeln!(out, "x,y")?;
        for (x, y) in &self.samples {
            match y {
                Some(y) => writeln!(out, "{x},{y}")?,
                None => writeln!(out, "{x},NA")?,
            }
        }
        Ok(())
    }
}

const MONOTONE_PROBES: usize = 65;

pub fn blowup_curve(
    cp: &CharacteristicPair,
    x_range: (f64, f64),
    y_range: (f64, f64),
    samples: usize,
    tol: f64,
) -> Result<BlowupCurve, ClosedFormError> {
    let (ylo, yhi) = y_range;
    let mut sign = 0.0;
    for k in 0..MONOTONE_PROBES {
        let y = ylo + (yhi - ylo) * k as f64 / (MONOTONE_PROBES - 1) as f64;
        let d = cp.g.eval_dual(&[y], 0)?.d1;
        let s = if d > 0.0 { 1.0 } else if d < 0.0 { -1.0 } else { 0.0 };
        if s == 0.0 || (sign != 0.0 && s != sign) {
            return Err(ClosedFormError::NonMonotoneG { y });
        }
        sign = s;
    }

    let samples = samples.max(1);
    let mut out = Vec::with_capacity(samples);
    for k in 0..samples {
        let x = if samples == 1 {
            x_range.0
        } else {
            x_range.0 + (x_range.1 - x_range.0) * k as f64 / (samples - 1) as f64
        };
        let fx = cp.f.eval(&[x])?;
        out.push((x, root_in_y(cp, fx, ylo, yhi, tol)?));
    }
    Ok(BlowupCurve { samples: out, tol })
}

/// Safeguarded Newton/bisection for `fx + g(y) = 0` on `[lo, hi]`.
fn root_in_y(cp: &CharacteristicPair, fx: f64, lo: f64, hi: f64, tol: f64) -> Result<Option<f64>, EvalError> {
    let h = |y: f64| -> Result<(f64, f64, f64), EvalError> {
        let r = cp.g.eval_dual(&[y], 0)?;
        Ok((fx + r.value, r.d1, r.value))
    };
    let accept = |v: f64, g: f64| v.abs() <= tol * (fx.abs() + g.abs() + 1.0);
    let (mut a, mut b) = (lo, hi);
    let (ha, _, ga) = h(a)?;
    let (hb, _, gb) = h(b)?;
    if accept(ha, ga) {
        return Ok(Some(a));
    }
    if accept(hb, gb) {
        return Ok(Some(b));
    }
    if ha.signum() == hb.signum() {
        return Ok(None);
    }
    let rising = hb > ha;
    let mut y = 0.5 * (a + b);
    for _ in 0..200 {
        let (hy, dy, gyv) = h(y)?;
        if accept(hy, gyv) {
            return Ok(Some(y));
        }
        if (hy > 0.0) == rising {
            b = y;
        } else {
            a = y;
        }
        let newton = y - hy / dy;
        y = if newton > a && newton < b { newton } else { 0.5 * (a + b) };
        if b - a <= f64::EPSILON * (a.abs() + b.abs()) {
            return Ok(Some(y));
        }
    }
    Ok(Some(y))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogDirection {
    /// `T = e^u`
    UToT,
    /// `u = ln T`
    TToU,
}

/// Converts between `u` of `u_xy = K e^u` and the metric factor `T` of the
/// log form `(1/T)·∂²(log T)/∂x∂y = K`.
pub fn convert_log_form(field: &ScalarField2D, dir: LogDirection) -> Result<ScalarField2D, ClosedFormError> {
    Ok(match dir {
        LogDirection::UToT => field.map(f64::exp),
        LogDirection::TToU => {
            check_positive(field)?;
            field.map(f64::ln)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;

    fn grid1(x: f64, y: f64) -> Grid2D {
        Grid2D::new(2, 2, x, y, 1.0, 1.0).unwrap()
    }

    #[test]
    fn liouville_formula_spot_values() {
        let cp = CharacteristicPair::parse("x", "y").unwrap();
        let u = hyperbolic_exact(&cp, LiouvilleParams::unit(), grid1(1.0, 1.0)).unwrap();
        assert!((u.at(0, 0) + std::f64::consts::LN_2).abs() < 1e-15);
        let cp = CharacteristicPair::parse("exp(x)", "exp(y)").unwrap();
        let u = hyperbolic_exact(&cp, LiouvilleParams::unit(), grid1(0.0, 0.0)).unwrap();
        assert!((u.at(0, 0) + std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn singular_and_sign_errors() {
        let cp = CharacteristicPair::parse("x", "y").unwrap();
        let g = Grid2D::from_bounds(-1.0, -1.0, 1.0, 1.0, 9, 9).unwrap();
        assert!(matches!(
            hyperbolic_exact(&cp, LiouvilleParams::unit(), g),
            Err(ClosedFormError::SingularNode { .. })
        ));
        let cp = CharacteristicPair::parse("x", "-y").unwrap();
        assert!(matches!(
            hyperbolic_exact(&cp, LiouvilleParams::unit(), grid1(1.0, 3.0)),
            Err(ClosedFormError::SignError { i: 0, j: 0 })
        ));
        // with aK < 0 the same pair is admissible
        let p = LiouvilleParams::new(-1.0, 1.0).unwrap();
        assert!(hyperbolic_exact(&cp, p, grid1(1.0, 3.0)).is_ok());
    }

    #[test]
    fn elliptic_spot_values() {
        let minus = AnalyticSeed::parse("z", SeedSign::Minus).unwrap();
        let g = Grid2D::new(2, 2, 0.0, 0.0, 0.5, 0.5).unwrap();
        let u = elliptic_exact(&minus, LiouvilleParams::unit(), g).unwrap();
        assert!((u.at(0, 0) - 8f64.ln()).abs() < 1e-15);

        let plus = AnalyticSeed::parse("z", SeedSign::Plus).unwrap();
        let p = LiouvilleParams::new(-1.0, 1.0).unwrap();
        let u = elliptic_exact(&plus, p, grid1(1.0, 0.0)).unwrap();
        assert!((u.at(0, 0) - 2f64.ln()).abs() < 1e-15);

        let unit_circle = Grid2D::new(2, 2, 1.0, 0.0, 0.5, 0.5).unwrap();
        assert!(matches!(
            elliptic_exact(&minus, LiouvilleParams::unit(), unit_circle),
            Err(ClosedFormError::DomainViolation { i: 0, j: 0 })
        ));
        assert!(matches!(
            elliptic_exact(&minus, p, g),
            Err(ClosedFormError::SignMismatch { .. })
        ));
        let flat = AnalyticSeed::parse("z^2", SeedSign::Minus).unwrap();
        assert!(matches!(
            elliptic_exact(&flat, LiouvilleParams::unit(), g),
            Err(ClosedFormError::SeedDegenerate { i: 0, j: 0 })
        ));
    }

    #[test]
    fn gelfand_fold_by_scan() {
        // brute-force maximisation of λ(b) over (0, 10]
        let (mut best_b, mut best_l) = (0.0, 0.0);
        for k in 1..=100_000 {
            let b = 10.0 * k as f64 / 100_000.0;
            let l = gelfand_radial(b).unwrap().lambda;
            if l > best_l {
                best_l = l;
                best_b = b;
            }
        }
        assert!((best_b - 1.0).abs() <= 1e-4);
        let fold = gelfand_radial(1.0).unwrap();
        assert_eq!(fold.lambda, 2.0);
        assert!((fold.u0 - 4f64.ln()).abs() < 1e-15);
        assert!((best_l - fold.lambda).abs() < 1e-8);
    }

    #[test]
    fn gelfand_lambda_one() {
        // 8b = (1+b)²  ⇒  b = 3 − 2√2
        let b = 3.0 - 2.0 * 2f64.sqrt();
        let m = gelfand_radial(b).unwrap();
        assert!((m.lambda - 1.0).abs() < 1e-14);
        assert!((m.u0 - 0.316694).abs() < 1e-6);
        assert!((m.u0 - (8.0 * b).ln()).abs() < 1e-14);
        let lo = GelfandRadial::at_lambda(1.0, false).unwrap();
        assert!((lo.b - b).abs() < 1e-14);
        let hi = GelfandRadial::at_lambda(1.0, true).unwrap();
        assert!((hi.b * lo.b - 1.0).abs() < 1e-13);
        assert!((m.profile(1.0)).abs() < 1e-14);
        assert!(gelfand_radial(0.0).is_err());
    }

    #[test]
    fn gelfand_small_b_limit() {
        let m = gelfand_radial(1e-9).unwrap();
        assert!(m.lambda < 1e-8 && m.u0 < 1e-8);
    }

    #[test]
    fn blowup_exact_values() {
        let g = Grid2D::new(3, 3, -1.0, -1.0, 1.0, 1.0).unwrap();
        let u = boundary_blowup_exact(g);
        assert!((u.at(1, 1) - 8f64.ln()).abs() < 1e-15);
        assert!(u.at(0, 0).is_nan() && u.at(2, 1).is_nan());
        assert!((boundary_blowup_radial(0.5f64.sqrt()) - 32f64.ln()).abs() < 1e-13);
        let mut prev = boundary_blowup_radial(0.0);
        for k in 1..1000 {
            let v = boundary_blowup_radial(k as f64 / 1000.0);
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn blowup_curves() {
        let tol = 1e-12;
        let cp = CharacteristicPair::parse("x", "y").unwrap();
        let c = blowup_curve(&cp, (-1.0, 1.0), (-2.0, 2.0), 21, tol).unwrap();
        for (x, y) in &c.samples {
            assert!((y.unwrap() + x).abs() <= 1e-11);
        }
        let cp = CharacteristicPair::parse("exp(x)", "y").unwrap();
        let c = blowup_curve(&cp, (-1.0, 1.0), (-5.0, 0.0), 11, tol).unwrap();
        for (x, y) in &c.samples {
            assert!((y.unwrap() + x.exp()).abs() <= 1e-11);
        }
        let cp = CharacteristicPair::parse("x", "exp(y)").unwrap();
        let c = blowup_curve(&cp, (0.5, 1.0), (-5.0, 5.0), 6, tol).unwrap();
        assert!(c.samples.iter().all(|(_, y)| y.is_none()));
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("x,y\n0.5,NA\n"));

        let cp = CharacteristicPair::parse("x", "y^2").unwrap();
        assert!(matches!(
            blowup_curve(&cp, (0.0, 1.0), (-1.0, 1.0), 3, tol),
            Err(ClosedFormError::NonMonotoneG { .. })
        ));
    }

    #[test]
    fn log_conversion() {
        let g = Grid2D::new(3, 3, 0.0, 0.0, 1.0, 1.0).unwrap();
        let t = convert_log_form(&ScalarField2D::filled(g, 0.0), LogDirection::UToT).unwrap();
        assert!(t.values.iter().all(|&v| v == 1.0));
        let mut bad = t.clone();
        bad.values[4] = -1.0;
        assert!(matches!(
            convert_log_form(&bad, LogDirection::TToU),
            Err(ClosedFormError::Field(FieldError::NonPositiveField { i: 1, j: 1, .. }))
        ));
    }

    #[test]
    fn not_univariate_rejected() {
        let f = Expr::parse("x*y", &["x", "y"]).unwrap();
        let g = Expr::parse("y", &["y"]).unwrap();
        assert!(CharacteristicPair::new(f, g).is_err());
    }
}
