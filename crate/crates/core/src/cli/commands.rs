use super::*;
use crate::action::{action_gradient, action_value, ActionParams};
use crate::closedform::{
    blowup_curve, boundary_blowup_exact, convert_log_form, elliptic_exact, hyperbolic_exact, AnalyticSeed,
    CharacteristicPair, ClosedFormError, LogDirection, SeedSign,
};
use crate::elliptic::{
    boundary_blowup_approx, continue_branch_with, refine_on_branch, solve_dirichlet_with, Boundary, BranchSide,
    ContinuationOptions, DirichletProblem, EllipticError, Geometry, NewtonOptions, Solution, Source,
};
use crate::expr::{Expr, ParseError};
use crate::fields::{
    norms, read_field, write_field, write_mask, residual_elliptic, residual_hyperbolic, residual_log, FieldError, Grid2D, LiouvilleParams, ScalarField2D,
};
use crate::hyperbolic::{backlund, march, GoursatData, HyperbolicError, PathOrder, WaveSolution};
use serde_json::{json, Value};
use std::fs::File;
use std::io::{BufWriter, Read};

type R<T> = Result<T, Failure>;

fn parse_err(what: &str, e: ParseError) -> Failure {
    Failure::validation(format!("expr.{}", variant(&e)), format!("{what}: {e}"))
}

fn field_err(e: FieldError) -> Failure {
    Failure::validation(format!("fields.{}", variant(&e)), e)
}

fn closed_err(e: ClosedFormError) -> Failure {
    Failure::validation(format!("closedform.{}", variant(&e)), e)
}

fn elliptic_err(e: EllipticError) -> Failure {
    let code = format!("elliptic.{}", variant(&e));
    match e {
        EllipticError::NonConvergence(_) | EllipticError::StepFailure { .. } | EllipticError::SingularJacobian(_) => {
            Failure::nonconvergence(code, e)
        }
        _ => Failure::validation(code, e),
    }
}

fn hyperbolic_err(e: HyperbolicError) -> Failure {
    let code = format!("hyperbolic.{}", variant(&e));
    match e {
        HyperbolicError::CellIterationDivergence { .. } => Failure::nonconvergence(code, e),
        _ => Failure::validation(code, e),
    }
}

fn io_err(e: impl std::fmt::Display) -> Failure {
    Failure::validation("cli.Io", e)
}

fn grid(g: &GridArgs) -> R<Grid2D> {
    let d = &g.domain;
    Grid2D::from_bounds(d[0], d[1], d[2], d[3], g.nx, g.ny).map_err(field_err)
}

fn params(p: &ParamArgs) -> R<LiouvilleParams> {
    LiouvilleParams::new(p.k, p.a).map_err(field_err)
}

fn read_input(path: &str, stdin: &mut dyn BufRead, hasher: &mut Sha256) -> R<ScalarField2D> {
    let mut bytes = Vec::new();
    if path == "-" {
        stdin.read_to_end(&mut bytes).map_err(io_err)?;
    } else {
        File::open(path).and_then(|mut f| f.read_to_end(&mut bytes)).map_err(|e| io_err(format!("{path}: {e}")))?;
    }
    hasher.update(&bytes);
    read_field(bytes.as_slice()).map_err(|e| Failure::validation("fields.Format", e))
}

/// Writes to `--out` or, without it, to stdout. Returns whether stdout was used.
fn emit(out: &OutArgs, stdout: &mut dyn Write, body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> R<bool> {
    match &out.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path).map_err(|e| io_err(format!("{}: {e}", path.display())))?);
            body(&mut w).and_then(|_| w.flush()).map_err(io_err)?;
            Ok(false)
        }
        None => {
            body(stdout).map_err(io_err)?;
            Ok(true)
        }
    }
}

fn write_to(path: &std::path::Path, body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> R<()> {
    let mut w = BufWriter::new(File::create(path).map_err(|e| io_err(format!("{}: {e}", path.display())))?);
    body(&mut w).and_then(|_| w.flush()).map_err(io_err)
}

fn range_summary(f: &ScalarField2D) -> Value {
    let finite: Vec<f64> = f.values.iter().copied().filter(|v| v.is_finite()).collect();
    json!({
        "nx": f.grid.nx,
        "ny": f.grid.ny,
        "finite_nodes": finite.len(),
        "min": finite.iter().copied().reduce(f64::min),
        "max": finite.iter().copied().reduce(f64::max),
    })
}

fn field_outcome(out: &OutArgs, stdout: &mut dyn Write, f: &ScalarField2D, mut results: Value) -> R<Outcome> {
    let streamed = emit(out, stdout, |w| write_field(w, f))?;
    if let (Value::Object(m), Value::Object(extra)) = (&mut results, range_summary(f)) {
        for (k, v) in extra {
            m.entry(k).or_insert(v);
        }
    }
    Ok(Outcome { results, streamed })
}

pub(super) fn dispatch(
    cmd: &Command,
    stdin: &mut dyn BufRead,
    stdout: &mut dyn Write,
    hasher: &mut Sha256,
) -> R<Outcome> {
    match cmd {
        Command::ExactH(a) => {
            let cp = CharacteristicPair::parse(&a.f, &a.g).map_err(|e| parse_err("f/g", e))?;
            let u = hyperbolic_exact(&cp, params(&a.params)?, grid(&a.grid)?).map_err(closed_err)?;
            field_outcome(&a.out, stdout, &u, json!({}))
        }
        Command::ExactE(a) => {
            let p = params(&a.params)?;
            let sign = match a.sign {
                Some(SignArg::Plus) => SeedSign::Plus,
                Some(SignArg::Minus) => SeedSign::Minus,
                None => SeedSign::for_params(p),
            };
            let seed = AnalyticSeed::parse(&a.seed, sign).map_err(|e| parse_err("seed", e))?;
            let u = elliptic_exact(&seed, p, grid(&a.grid)?).map_err(closed_err)?;
            field_outcome(&a.out, stdout, &u, json!({ "sign": format!("{sign:?}").to_lowercase() }))
        }
        Command::BlowupExact(a) => {
            let u = boundary_blowup_exact(grid(&a.grid)?);
            field_outcome(&a.out, stdout, &u, json!({}))
        }
        Command::BlowupCurve(a) => {
            let cp = CharacteristicPair::parse(&a.f, &a.g).map_err(|e| parse_err("f/g", e))?;
            let c = blowup_curve(&cp, (a.x_range[0], a.x_range[1]), (a.y_range[0], a.y_range[1]), a.samples, a.tol)
                .map_err(closed_err)?;
            let streamed = emit(&a.out, stdout, |w| c.write_csv(w))?;
            let found = c.samples.iter().filter(|s| s.1.is_some()).count();
            Ok(Outcome { results: json!({ "samples": c.samples.len(), "roots": found }), streamed })
        }
        Command::Verify(a) => {
            let f = read_input(&a.input, stdin, hasher)?;
            let r = match a.eq {
                EqArg::Hyperbolic => residual_hyperbolic(&f, params(&a.params)?),
                EqArg::Elliptic => residual_elliptic(&f, params(&a.params)?),
                EqArg::Log => residual_log(&f, a.params.k),
            }
            .map_err(field_err)?;
            let n = norms(&r).map_err(field_err)?;
            if let Some(path) = &a.residual_out {
                write_to(path, |w| write_field(w, &r))?;
            }
            Ok(Outcome {
                results: json!({
                    "eq": a.eq,
                    "max_abs": n.max_abs,
                    "l2": n.l2,
                    "nodes": r.values.iter().filter(|v| !v.is_nan()).count(),
                }),
                streamed: false,
            })
        }
        Command::SolveElliptic(a) => solve_elliptic(a, stdout),
        Command::Gelfand(a) => gelfand(a, stdout),
        Command::BlowupApprox(a) => {
            let profs = boundary_blowup_approx(a.n, &a.m).map_err(elliptic_err)?;
            let streamed = emit(&a.out, stdout, |w| {
                let mut header = String::from("r");
                for m in &a.m {
                    header.push_str(&format!(",M={m}"));
                }
                writeln!(w, "{header}")?;
                for (i, r) in profs[0].r.iter().enumerate() {
                    let mut line = r.to_string();
                    for p in &profs {
                        line.push_str(&format!(",{}", p.u[i]));
                    }
                    writeln!(w, "{line}")?;
                }
                Ok(())
            })?;
            let centers: Vec<f64> = profs.iter().map(|p| p.center()).collect();
            let ln8 = 8f64.ln();
            Ok(Outcome {
                results: json!({
                    "M": a.m,
                    "center": centers,
                    "gap_to_ln8": centers.iter().map(|c| (c - ln8).abs()).collect::<Vec<_>>(),
                }),
                streamed,
            })
        }
        Command::March(a) => {
            let data = GoursatData::parse(&a.phi, &a.psi).map_err(|e| parse_err("phi/psi", e))?;
            let m = march(&data, params(&a.params)?, grid(&a.grid)?, a.threshold).map_err(hyperbolic_err)?;
            if let Some(path) = &a.mask_out {
                write_to(path, |w| write_mask(w, &m.field.grid, &m.mask))?;
            }
            field_outcome(&a.out, stdout, &m.field, json!({ "masked": m.masked_count() }))
        }
        Command::Backlund(a) => {
            let w = WaveSolution::parse(&a.phi, &a.psi).map_err(|e| parse_err("phi/psi", e))?;
            let order = match a.order {
                OrderArg::XThenY => PathOrder::XThenY,
                OrderArg::YThenX => PathOrder::YThenX,
            };
            let g = grid(&a.grid)?;
            let u = backlund(&w, a.bt_a, a.u_corner, g, order).map_err(hyperbolic_err)?;
            let far = u.at(g.nx - 1, g.ny - 1);
            field_outcome(&a.out, stdout, &u, json!({ "far_corner": far }))
        }
        Command::Action(a) => action(a, stdin, hasher),
        Command::ConvertLog(a) => {
            let f = read_input(&a.input, stdin, hasher)?;
            let dir = match a.direction {
                DirectionArg::UToT => LogDirection::UToT,
                DirectionArg::TToU => LogDirection::TToU,
            };
            let out = convert_log_form(&f, dir).map_err(closed_err)?;
            field_outcome(&a.out, stdout, &out, json!({ "direction": a.direction }))
        }
    }
}

fn geometry(kind: GeometryArg, n: usize, g: &GridArgs) -> R<Geometry> {
    Ok(match kind {
        GeometryArg::Rect => Geometry::Rectangle(grid(g)?),
        GeometryArg::Disk => Geometry::Disk { n },
    })
}

fn solve_elliptic(a: &SolveEllipticArgs, stdout: &mut dyn Write) -> R<Outcome> {
    let geom = geometry(a.geometry, a.n, &a.grid)?;
    let source = match a.lambda {
        Some(l) => Source::Gelfand(l),
        None => Source::Liouville(params(&a.params)?),
    };
    let bexpr = Expr::parse(&a.boundary, &["x", "y"]).map_err(|e| parse_err("boundary", e))?;
    let boundary = if bexpr.is_constant() {
        Boundary::Constant(bexpr.eval(&[0.0, 0.0]).map_err(|e| Failure::validation(format!("expr.{}", variant(&e)), e))?)
    } else {
        Boundary::Expr(bexpr)
    };
    let opts = NewtonOptions { tol: a.tol, max_iter: a.max_iter, ..NewtonOptions::default() };
    let prob = DirichletProblem { geometry: geom, source, boundary };
    let (sol, rep) = solve_dirichlet_with(&prob, None, &opts).map_err(elliptic_err)?;
    if let Some(path) = &a.report {
        write_to(path, |w| {
            serde_json::to_writer_pretty(&mut *w, &rep)?;
            writeln!(w)
        })?;
    }
    let streamed = emit(&a.out, stdout, |w| match &sol {
        Solution::Field(f) => write_field(w, f),
        Solution::Radial(p) => p.write_csv(w),
    })?;
    Ok(Outcome {
        results: json!({
            "center": sol.center(),
            "iterations": rep.iterations,
            "final_residual": rep.final_residual,
            "converged": rep.converged,
        }),
        streamed,
    })
}

fn gelfand(a: &GelfandArgs, stdout: &mut dyn Write) -> R<Outcome> {
    let geom = geometry(a.geometry, a.n, &a.grid)?;
    let opts = ContinuationOptions { u0_max: a.u0_max, ..ContinuationOptions::default() };
    let branch = continue_branch_with(&geom, a.lambda_start, a.max_steps, a.ds, &opts).map_err(elliptic_err)?;
    let mut probes = Vec::new();
    for &l in &a.probe {
        let side = |s| refine_on_branch(&branch, l, s).ok().map(|p| p.u0);
        probes.push(json!({ "lambda": l, "lower_u0": side(BranchSide::Lower), "upper_u0": side(BranchSide::Upper) }));
    }
    let streamed = emit(&a.out, stdout, |w| branch.write_csv(w))?;
    let last = branch.points.last().map(|p| json!({ "lambda": p.lambda, "u0": p.u0, "s": p.s }));
    Ok(Outcome {
        results: json!({
            "lambda0": branch.fold.map(|f| f.lambda),
            "u0_at_fold": branch.fold.map(|f| f.u0),
            "s_at_fold": branch.fold.map(|f| f.s),
            "fold_index": branch.fold.map(|f| f.index),
            "points": branch.points.len(),
            "last": last,
            "probes": probes,
        }),
        streamed,
    })
}

fn action(a: &ActionArgs, stdin: &mut dyn BufRead, hasher: &mut Sha256) -> R<Outcome> {
    let phi = read_input(&a.input, stdin, hasher)?;
    let p = ActionParams::new(a.c, a.mu).map_err(field_err)?;
    let value = action_value(&phi, p).map_err(field_err)?;
    let grad = action_gradient(&phi, p).map_err(field_err)?;
    let g = phi.grid;
    let interior: Vec<(usize, usize)> =
        (1..g.ny.saturating_sub(1)).flat_map(|j| (1..g.nx.saturating_sub(1)).map(move |i| (i, j))).collect();
    let gmax = grad.values.iter().filter(|v| !v.is_nan()).fold(0.0_f64, |m, v| m.max(v.abs()));
    // deterministic spread of check nodes
    let mut max_rel = 0.0_f64;
    let checks = a.checks.min(interior.len());
    for k in 0..checks {
        let (i, j) = interior[(k * 7919 + 13) % interior.len()];
        let mut plus = phi.clone();
        plus.values[g.index(i, j)] += a.eps;
        let mut minus = phi.clone();
        minus.values[g.index(i, j)] -= a.eps;
        let fd = (action_value(&plus, p).map_err(field_err)? - action_value(&minus, p).map_err(field_err)?)
            / (2.0 * a.eps);
        let ex = grad.at(i, j);
        max_rel = max_rel.max((fd - ex).abs() / ex.abs().max(1e-8 * gmax).max(f64::MIN_POSITIVE));
    }
    if let Some(path) = &a.gradient_out {
        write_to(path, |w| write_field(w, &grad))?;
    }
    let scale = p.c() * g.hx * g.hy;
    let el = grad.values.iter().filter(|v| !v.is_nan()).fold(0.0_f64, |m, v| m.max(v.abs() / scale));
    Ok(Outcome {
        results: json!({
            "value": value,
            "gradient_checks": checks,
            "max_rel_err": max_rel,
            "euler_lagrange_max": el,
        }),
        streamed: false,
    })
}
