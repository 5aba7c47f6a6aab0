//! C interface to `liouville`.
//!
//! Expressions and fields are opaque heap handles released with their
//! `*_free` function. Every fallible call returns an [`LvStatus`]; on
//! failure [`lv_last_error`] describes the problem for the calling thread.
//! Output pointers are written only on success.

use liouville::action::{action_gradient, action_value, ActionParams};
use liouville::closedform::{self, AnalyticSeed, CharacteristicPair, ClosedFormError, SeedSign};
use liouville::elliptic::{self, EllipticError, Geometry};
use liouville::expr::{Expr, ParseError};
use liouville::fields::{self, FieldError, Grid2D, LiouvilleParams, ScalarField2D};
use liouville::hyperbolic::{self, GoursatData, HyperbolicError, PathOrder, WaveSolution};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LvStatus {
    Ok = 0,
    /// Null pointer, bad UTF-8 or an out-of-range argument.
    InvalidArgument = 1,
    /// Expression source did not parse.
    Parse = 2,
    /// Input outside the domain of the operation (singular node, sign, grid).
    Domain = 3,
    /// An iterative solver or integrator did not converge.
    NonConvergence = 4,
    /// File could not be read or written.
    Io = 5,
    /// Internal panic caught at the boundary.
    Panic = 6,
}

/// Which residual [`lv_residual_norms`] evaluates.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LvEquation {
    /// `u_xy − K e^{au}` at cell centres.
    Hyperbolic = 0,
    /// `Δu − K e^{au}` at interior nodes.
    Elliptic = 1,
    /// `(ln T)_xy / T̄ − K` at cell centres; the field holds `T > 0`.
    Log = 2,
}

/// Rectangle `[x0, x1] × [y0, y1]` sampled with `nx × ny` nodes.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct LvDomain {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
    pub nx: usize,
    pub ny: usize,
}

/// Parsed expression.
pub struct LvExpr(Expr);

/// Sampled field on a uniform grid, row-major in `y`.
pub struct LvField(ScalarField2D);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl ToString) {
    let text = msg.to_string().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).unwrap_or_default());
}

struct Failure(LvStatus, String);

impl Failure {
    fn invalid(msg: impl ToString) -> Self {
        Failure(LvStatus::InvalidArgument, msg.to_string())
    }
}

impl From<ParseError> for Failure {
    fn from(e: ParseError) -> Self {
        Failure(LvStatus::Parse, e.to_string())
    }
}

impl From<FieldError> for Failure {
    fn from(e: FieldError) -> Self {
        Failure(LvStatus::Domain, e.to_string())
    }
}

impl From<ClosedFormError> for Failure {
    fn from(e: ClosedFormError) -> Self {
        Failure(LvStatus::Domain, e.to_string())
    }
}

impl From<EllipticError> for Failure {
    fn from(e: EllipticError) -> Self {
        let status = match e {
            EllipticError::NonConvergence(_) | EllipticError::StepFailure { .. } | EllipticError::SingularJacobian(_) => {
                LvStatus::NonConvergence
            }
            _ => LvStatus::Domain,
        };
        Failure(status, e.to_string())
    }
}

impl From<HyperbolicError> for Failure {
    fn from(e: HyperbolicError) -> Self {
        let status = match e {
            HyperbolicError::CellIterationDivergence { .. } => LvStatus::NonConvergence,
            _ => LvStatus::Domain,
        };
        Failure(status, e.to_string())
    }
}

/// Runs `body`, converting errors and panics into a status code.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> LvStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_error("");
            LvStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            LvStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::invalid(format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure::invalid(format!("{what} is not UTF-8")))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| Failure::invalid(format!("{what} is null")))
}

unsafe fn deref_field<'a>(p: *const LvField) -> Result<&'a ScalarField2D, Failure> {
    p.as_ref().map(|f| &f.0).ok_or_else(|| Failure::invalid("field is null"))
}

fn grid(d: &LvDomain) -> Result<Grid2D, Failure> {
    Ok(Grid2D::from_bounds(d.x0, d.y0, d.x1, d.y1, d.nx, d.ny)?)
}

fn boxed(f: ScalarField2D) -> *mut LvField {
    Box::into_raw(Box::new(LvField(f)))
}

/// Message for the last failed call on this thread; empty after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn lv_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Parses `src` over the `nvars` variable names in `vars` (1 or 2).
///
/// # Safety
/// `src` and each `vars[i]` must be NUL-terminated strings; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn lv_expr_parse(
    src: *const c_char,
    vars: *const *const c_char,
    nvars: usize,
    out_expr: *mut *mut LvExpr,
) -> LvStatus {
    guard(|| {
        let src = text(src, "src")?;
        if vars.is_null() {
            return Err(Failure::invalid("vars is null"));
        }
        let names = (0..nvars).map(|i| text(*vars.add(i), "variable name")).collect::<Result<Vec<_>, _>>()?;
        let slot = out(out_expr, "out_expr")?;
        *slot = Box::into_raw(Box::new(LvExpr(Expr::parse(src, &names)?)));
        Ok(())
    })
}

/// Evaluates at `at[0..n]` with first and second derivatives along
/// variable `wrt`. Any of `value`, `d1`, `d2` may be null.
///
/// # Safety
/// `expr` must come from [`lv_expr_parse`]; `at` must hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn lv_expr_eval(
    expr: *const LvExpr,
    at: *const f64,
    n: usize,
    wrt: usize,
    value: *mut f64,
    d1: *mut f64,
    d2: *mut f64,
) -> LvStatus {
    guard(|| {
        let e = expr.as_ref().ok_or_else(|| Failure::invalid("expr is null"))?;
        if at.is_null() && n > 0 {
            return Err(Failure::invalid("at is null"));
        }
        let point = if n == 0 { &[][..] } else { std::slice::from_raw_parts(at, n) };
        let r = e.0.eval_dual(point, wrt).map_err(|err| Failure(LvStatus::Domain, err.to_string()))?;
        for (p, v) in [(value, r.value), (d1, r.d1), (d2, r.d2)] {
            if let Some(p) = p.as_mut() {
                *p = v;
            }
        }
        Ok(())
    })
}

/// # Safety
/// `expr` must come from [`lv_expr_parse`] or be null.
#[no_mangle]
pub unsafe extern "C" fn lv_expr_free(expr: *mut LvExpr) {
    if !expr.is_null() {
        drop(Box::from_raw(expr));
    }
}

/// Copies `nx·ny` values (row-major in `y`) into a new field with origin
/// `(x0, y0)` and spacings `hx`, `hy`.
///
/// # Safety
/// `values` must hold `nx·ny` doubles; `out_field` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lv_field_new(
    nx: usize,
    ny: usize,
    x0: f64,
    y0: f64,
    hx: f64,
    hy: f64,
    values: *const f64,
    out_field: *mut *mut LvField,
) -> LvStatus {
    guard(|| {
        let g = Grid2D::new(nx, ny, x0, y0, hx, hy)?;
        if values.is_null() {
            return Err(Failure::invalid("values is null"));
        }
        let v = std::slice::from_raw_parts(values, g.len()).to_vec();
        *out(out_field, "out_field")? = boxed(ScalarField2D::new(g, v)?);
        Ok(())
    })
}

/// Grid of `field`: node counts, origin and spacings. Null outputs are skipped.
///
/// # Safety
/// `field` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn lv_field_grid(
    field: *const LvField,
    nx: *mut usize,
    ny: *mut usize,
    x0: *mut f64,
    y0: *mut f64,
    hx: *mut f64,
    hy: *mut f64,
) -> LvStatus {
    guard(|| {
        let g = deref_field(field)?.grid;
        for (p, v) in [(nx, g.nx), (ny, g.ny)] {
            if let Some(p) = p.as_mut() {
                *p = v;
            }
        }
        for (p, v) in [(x0, g.x0), (y0, g.y0), (hx, g.hx), (hy, g.hy)] {
            if let Some(p) = p.as_mut() {
                *p = v;
            }
        }
        Ok(())
    })
}

/// Borrowed pointer to the `nx·ny` values, `NaN` at masked or undefined
/// nodes. Null if `field` is null. Valid while the handle lives.
///
/// # Safety
/// `field` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn lv_field_values(field: *const LvField) -> *const f64 {
    match field.as_ref() {
        Some(f) => f.0.values.as_ptr(),
        None => std::ptr::null(),
    }
}

/// Reads a field file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out_field` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lv_field_read(path: *const c_char, out_field: *mut *mut LvField) -> LvStatus {
    guard(|| {
        let path = text(path, "path")?;
        let file = std::fs::File::open(path).map_err(|e| Failure(LvStatus::Io, format!("{path}: {e}")))?;
        let f = fields::read_field(std::io::BufReader::new(file)).map_err(|e| Failure(LvStatus::Io, e.to_string()))?;
        *out(out_field, "out_field")? = boxed(f);
        Ok(())
    })
}

/// Writes a field file.
///
/// # Safety
/// `field` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn lv_field_write(field: *const LvField, path: *const c_char) -> LvStatus {
    guard(|| {
        let (f, path) = (deref_field(field)?, text(path, "path")?);
        let mut file = std::fs::File::create(path).map_err(|e| Failure(LvStatus::Io, format!("{path}: {e}")))?;
        fields::write_field(&mut file, f).map_err(|e| Failure(LvStatus::Io, e.to_string()))
    })
}

/// # Safety
/// `field` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn lv_field_free(field: *mut LvField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Samples `u = (1/a)·ln(2f'g' / (aK(f + g)²))` with `f` in `x`, `g` in `y`.
///
/// # Safety
/// `f`, `g` must be NUL-terminated strings; `out_field` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lv_hyperbolic_exact(
    f: *const c_char,
    g: *const c_char,
    k: f64,
    a: f64,
    domain: LvDomain,
    out_field: *mut *mut LvField,
) -> LvStatus {
    guard(|| {
        let cp = CharacteristicPair::parse(text(f, "f")?, text(g, "g")?)?;
        let p = LiouvilleParams::new(k, a)?;
        *out(out_field, "out_field")? = boxed(closedform::hyperbolic_exact(&cp, p, grid(&domain)?)?);
        Ok(())
    })
}

/// Samples the one-seed solution of `Δu = K e^{au}` from the analytic
/// function `seed` of `z`; the denominator sign follows `sign(aK)`.
///
/// # Safety
/// `seed` must be a NUL-terminated string; `out_field` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lv_elliptic_exact(
    seed: *const c_char,
    k: f64,
    a: f64,
    domain: LvDomain,
    out_field: *mut *mut LvField,
) -> LvStatus {
    guard(|| {
        let p = LiouvilleParams::new(k, a)?;
        let s = AnalyticSeed::parse(text(seed, "seed")?, SeedSign::for_params(p))?;
        *out(out_field, "out_field")? = boxed(closedform::elliptic_exact(&s, p, grid(&domain)?)?);
        Ok(())
    })
}

/// Max-norm and L² norm of a residual of `field`. For
/// [`LvEquation::Log`] the field holds `T` and `a` is ignored.
///
/// # Safety
/// `field` must be a live handle; null outputs are skipped.
#[no_mangle]
pub unsafe extern "C" fn lv_residual_norms(
    field: *const LvField,
    eq: LvEquation,
    k: f64,
    a: f64,
    max_abs: *mut f64,
    l2: *mut f64,
) -> LvStatus {
    guard(|| {
        let f = deref_field(field)?;
        let r = match eq {
            LvEquation::Hyperbolic => fields::residual_hyperbolic(f, LiouvilleParams::new(k, a)?)?,
            LvEquation::Elliptic => fields::residual_elliptic(f, LiouvilleParams::new(k, a)?)?,
            LvEquation::Log => fields::residual_log(f, k)?,
        };
        let n = fields::norms(&r)?;
        for (p, v) in [(max_abs, n.max_abs), (l2, n.l2)] {
            if let Some(p) = p.as_mut() {
                *p = v;
            }
        }
        Ok(())
    })
}

/// Continues `Δu + λe^u = 0` on the unit disk (radial grid of `n` nodes)
/// from `λ = 0` and reports the first fold.
///
/// # Safety
/// `lambda0` and `u0` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lv_gelfand_fold(n: usize, lambda0: *mut f64, u0: *mut f64) -> LvStatus {
    guard(|| {
        let (lo, uo) = (out(lambda0, "lambda0")?, out(u0, "u0")?);
        let branch = elliptic::continue_branch(&Geometry::Disk { n }, 0.0, 500, 0.05)?;
        let fold = branch.fold.ok_or(Failure(LvStatus::NonConvergence, "no fold before the step limit".into()))?;
        *lo = fold.lambda;
        *uo = fold.u0;
        Ok(())
    })
}

/// Marches `u_xy = K e^{au}` from `u(x, y0) = phi(x)` and `u(x0, y) = psi(y)`.
/// Nodes above `threshold` and everything downstream are `NaN`;
/// `masked` (optional) receives their count.
///
/// # Safety
/// `phi`, `psi` must be NUL-terminated strings; `out_field` writable.
#[no_mangle]
pub unsafe extern "C" fn lv_march(
    phi: *const c_char,
    psi: *const c_char,
    k: f64,
    a: f64,
    domain: LvDomain,
    threshold: f64,
    out_field: *mut *mut LvField,
    masked: *mut usize,
) -> LvStatus {
    guard(|| {
        let data = GoursatData::parse(text(phi, "phi")?, text(psi, "psi")?)?;
        let r = hyperbolic::march(&data, LiouvilleParams::new(k, a)?, grid(&domain)?, threshold)?;
        let slot = out(out_field, "out_field")?;
        if let Some(m) = masked.as_mut() {
            *m = r.masked_count();
        }
        *slot = boxed(r.field);
        Ok(())
    })
}

/// Integrates the Bäcklund pair from `w = phi(x) + psi(y)` with
/// `u(x0, y0) = u_corner`; `y_first` selects the left edge first.
///
/// # Safety
/// `phi`, `psi` must be NUL-terminated strings; `out_field` writable.
#[no_mangle]
pub unsafe extern "C" fn lv_backlund(
    phi: *const c_char,
    psi: *const c_char,
    bt_a: f64,
    u_corner: f64,
    domain: LvDomain,
    y_first: bool,
    out_field: *mut *mut LvField,
) -> LvStatus {
    guard(|| {
        let w = WaveSolution::parse(text(phi, "phi")?, text(psi, "psi")?)?;
        let order = if y_first { PathOrder::YThenX } else { PathOrder::XThenY };
        let u = hyperbolic::backlund(&w, bt_a, u_corner, grid(&domain)?, order)?;
        *out(out_field, "out_field")? = boxed(u);
        Ok(())
    })
}

/// Liouville action of `field` and, if `out_gradient` is non-null, its
/// gradient with respect to the nodes (`NaN` on the boundary).
///
/// # Safety
/// `field` must be a live handle; `value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lv_action(
    field: *const LvField,
    c: f64,
    mu: f64,
    value: *mut f64,
    out_gradient: *mut *mut LvField,
) -> LvStatus {
    guard(|| {
        let f = deref_field(field)?;
        let p = ActionParams::new(c, mu)?;
        let v = out(value, "value")?;
        let grad = if out_gradient.is_null() { None } else { Some(action_gradient(f, p)?) };
        *v = action_value(f, p)?;
        if let Some(g) = grad {
            *out_gradient = boxed(g);
        }
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn message() -> String {
        unsafe { CStr::from_ptr(lv_last_error()).to_string_lossy().into_owned() }
    }

    #[test]
    fn guard_maps_outcomes() {
        assert_eq!(guard(|| Err(Failure::invalid("bad\0input"))), LvStatus::InvalidArgument);
        assert_eq!(message(), "bad input");
        assert_eq!(guard(|| Ok(())), LvStatus::Ok);
        assert_eq!(message(), "");
        let prev = std::panic::take_hook();
        std::panic::set_hook(Box::new(|_| {}));
        assert_eq!(guard(|| panic!("boom")), LvStatus::Panic);
        std::panic::set_hook(prev);
    }

    #[test]
    fn solver_errors_map_to_nonconvergence() {
        let e = HyperbolicError::CellIterationDivergence { i: 1, j: 2 };
        assert_eq!(Failure::from(e).0, LvStatus::NonConvergence);
        let e = HyperbolicError::CornerMismatch { phi: 0.0, psi: 1.0 };
        assert_eq!(Failure::from(e).0, LvStatus::Domain);
        let e = EllipticError::InvalidProblem("x".into());
        assert_eq!(Failure::from(e).0, LvStatus::Domain);
    }
}
