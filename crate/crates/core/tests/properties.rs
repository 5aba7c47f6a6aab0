use liouville::closedform::{convert_log_form, gelfand_radial, LogDirection};
use liouville::expr::Expr;
use liouville::fields::{
    norms, read_field, residual_hyperbolic, residual_log, write_field, Grid2D, LiouvilleParams, ScalarField2D,
};
use liouville::hyperbolic::{march_samples, DEFAULT_BLOWUP_THRESHOLD};
use num_complex::Complex64;
use proptest::prelude::*;

const SOURCES: &[&str] = &[
    "sin(C*x)*exp(x)",
    "cosh(x)/(2 + x^2)",
    "ln(3 + x^2)^2 - C*x^3",
    "sqrt(4 + sinh(C*x))",
    "(x - C)^4 / (1 + exp(-x))",
];

fn expr_with(i: usize, c: f64) -> Expr {
    Expr::parse(&SOURCES[i].replace('C', &format!("({c})")), &["x"]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn derivatives_converge_at_second_order(i in 0..SOURCES.len(), c in 0.3..1.5_f64, x in -1.0..1.0_f64) {
        let e = expr_with(i, c);
        let d = e.eval_dual(&[x], 0).unwrap();
        let f = |t: f64| e.eval(&[t]).unwrap();
        let d1 = |h: f64| (f(x + h) - f(x - h)) / (2.0 * h);
        let d2 = |h: f64| (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
        let (a, b) = ((d1(2e-2) - d.d1).abs(), (d1(1e-2) - d.d1).abs());
        prop_assert!(b <= a / 3.0 || a < 1e-10, "first derivative: {a} {b}");
        let (a, b) = ((d2(4e-2) - d.d2).abs(), (d2(2e-2) - d.d2).abs());
        prop_assert!(b <= a / 3.0 || a < 1e-7, "second derivative: {a} {b}");
    }

    #[test]
    fn complex_derivative_is_holomorphic(re in -0.5..0.5_f64, im in -0.5..0.5_f64) {
        let e = Expr::parse("exp(z)*z^2 + sin(z)/(2 + z)", &["z"]).unwrap();
        let z = Complex64::new(re, im);
        let (_, d) = e.eval_complex(z).unwrap();
        let h = 1e-5;
        let fd_re = (e.eval_complex(z + h).unwrap().0 - e.eval_complex(z - h).unwrap().0) / (2.0 * h);
        let ih = Complex64::new(0.0, h);
        let fd_im = (e.eval_complex(z + ih).unwrap().0 - e.eval_complex(z - ih).unwrap().0) / (2.0 * ih);
        prop_assert!((fd_re - d).norm() <= 1e-8 * (1.0 + d.norm()));
        prop_assert!((fd_im - d).norm() <= 1e-8 * (1.0 + d.norm()));
    }

    #[test]
    fn constant_expressions_have_zero_derivatives(c in -100.0..100.0_f64, x in -5.0..5.0_f64) {
        let e = Expr::parse(&format!("({c})*2 - exp(0)"), &["x"]).unwrap();
        let d = e.eval_dual(&[x], 0).unwrap();
        prop_assert_eq!(d.d1, 0.0);
        prop_assert_eq!(d.d2, 0.0);
    }

    #[test]
    fn norms_are_seminorms(
        a in prop::collection::vec(-5.0..5.0_f64, 49),
        b in prop::collection::vec(-5.0..5.0_f64, 49),
        s in -3.0..3.0_f64,
    ) {
        let g = Grid2D::from_bounds(0.0, 0.0, 2.0, 1.0, 7, 7).unwrap();
        let fa = ScalarField2D::new(g, a.clone()).unwrap();
        let fb = ScalarField2D::new(g, b.clone()).unwrap();
        let sum = ScalarField2D::new(g, a.iter().zip(&b).map(|(x, y)| x + y).collect()).unwrap();
        let (na, nb, ns) = (norms(&fa).unwrap(), norms(&fb).unwrap(), norms(&sum).unwrap());
        let scaled = norms(&fa.map(|v| s * v)).unwrap();
        prop_assert!((scaled.max_abs - s.abs() * na.max_abs).abs() <= 1e-12 * (1.0 + na.max_abs));
        prop_assert!((scaled.l2 - s.abs() * na.l2).abs() <= 1e-12 * (1.0 + na.l2));
        prop_assert!(ns.max_abs <= na.max_abs + nb.max_abs + 1e-12);
        prop_assert!(ns.l2 <= na.l2 + nb.l2 + 1e-12);
        // L² never exceeds max-norm times sqrt(area of the node cells)
        prop_assert!(na.l2 <= na.max_abs * (g.hx * g.hy * g.len() as f64).sqrt() * (1.0 + 1e-12));
    }

    #[test]
    fn sentinels_do_not_change_norms(a in prop::collection::vec(-5.0..5.0_f64, 25), holes in prop::collection::vec(any::<bool>(), 25)) {
        let g = Grid2D::from_bounds(0.0, 0.0, 1.0, 1.0, 5, 5).unwrap();
        prop_assume!(holes.iter().any(|h| !h));
        let with: Vec<f64> = a.iter().zip(&holes).map(|(v, h)| if *h { f64::NAN } else { *v }).collect();
        let without: Vec<f64> = a.iter().zip(&holes).map(|(v, h)| if *h { 0.0 } else { *v }).collect();
        let n1 = norms(&ScalarField2D::new(g, with).unwrap()).unwrap();
        let n2 = norms(&ScalarField2D::new(g, without).unwrap()).unwrap();
        prop_assert_eq!(n1.max_abs, n2.max_abs);
        prop_assert!((n1.l2 - n2.l2).abs() <= 1e-14 * (1.0 + n2.l2));
    }

    #[test]
    fn branch_is_symmetric_under_b_inverse(b in 1e-3..1e3_f64) {
        let (p, q) = (gelfand_radial(b).unwrap(), gelfand_radial(1.0 / b).unwrap());
        prop_assert!((p.lambda - q.lambda).abs() <= 4.0 * f64::EPSILON * p.lambda);
        prop_assert!(p.lambda <= 2.0 + 1e-15);
        // both members vanish on the boundary, and the one with b > 1 sits higher
        prop_assert!(p.profile(1.0).abs() <= 1e-12 && q.profile(1.0).abs() <= 1e-12);
        if b > 1.0 + 1e-9 {
            prop_assert!(p.u0 > q.u0);
        }
    }

    #[test]
    fn log_form_round_trip(v in prop::collection::vec(-20.0..20.0_f64, 36)) {
        let g = Grid2D::from_bounds(-1.0, 0.0, 1.0, 2.0, 6, 6).unwrap();
        let u = ScalarField2D::new(g, v).unwrap();
        let t = convert_log_form(&u, LogDirection::UToT).unwrap();
        let back = convert_log_form(&t, LogDirection::TToU).unwrap();
        for (a, b) in u.values.iter().zip(&back.values) {
            prop_assert!((a - b).abs() <= 4.0 * f64::EPSILON * a.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn log_residual_is_hyperbolic_residual_over_mean_t(v in prop::collection::vec(-1.0..1.0_f64, 25), k in 0.5..2.0_f64) {
        let g = Grid2D::from_bounds(0.0, 0.0, 1.0, 1.0, 5, 5).unwrap();
        let u = ScalarField2D::new(g, v).unwrap();
        let t = convert_log_form(&u, LogDirection::UToT).unwrap();
        let rl = residual_log(&t, k).unwrap();
        let rh = residual_hyperbolic(&u, LiouvilleParams::new(k, 1.0).unwrap()).unwrap();
        for j in 0..rl.grid.ny {
            for i in 0..rl.grid.nx {
                let mean = 0.25 * (u.at(i, j) + u.at(i + 1, j) + u.at(i, j + 1) + u.at(i + 1, j + 1));
                let expected = rh.at(i, j) / mean.exp();
                prop_assert!((rl.at(i, j) - expected).abs() <= 1e-12 * (1.0 + expected.abs()));
            }
        }
    }

    #[test]
    fn field_files_round_trip_bitwise(v in prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::ZERO, 12)) {
        let g = Grid2D::new(4, 3, -0.1, 1e-7, 1.0 / 3.0, 0.7).unwrap();
        let f = ScalarField2D::new(g, v).unwrap();
        let mut buf = Vec::new();
        write_field(&mut buf, &f).unwrap();
        let back = read_field(buf.as_slice()).unwrap();
        prop_assert_eq!(back.grid, f.grid);
        for (a, b) in f.values.iter().zip(&back.values) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn marching_is_local(i0 in 1usize..10, j0 in 1usize..10, c in -0.5..0.5_f64) {
        let g = Grid2D::from_bounds(0.0, 0.0, 1.0, 1.0, 13, 13).unwrap();
        let p = LiouvilleParams::new(1.0, 1.0).unwrap();
        let bottom: Vec<f64> = (0..g.nx).map(|i| c * g.x(i)).collect();
        let left: Vec<f64> = (0..g.ny).map(|j| (c * g.y(j)).sin()).collect();
        let full = march_samples(&bottom, &left, p, g, DEFAULT_BLOWUP_THRESHOLD).unwrap().field;
        let sub = Grid2D::new(g.nx - i0, g.ny - j0, g.x(i0), g.y(j0), g.hx, g.hy).unwrap();
        let b: Vec<f64> = (i0..g.nx).map(|i| full.at(i, j0)).collect();
        let l: Vec<f64> = (j0..g.ny).map(|j| full.at(i0, j)).collect();
        let part = march_samples(&b, &l, p, sub, DEFAULT_BLOWUP_THRESHOLD).unwrap().field;
        for j in 0..sub.ny {
            for i in 0..sub.nx {
                prop_assert_eq!(part.at(i, j).to_bits(), full.at(i + i0, j + j0).to_bits());
            }
        }
    }
}
