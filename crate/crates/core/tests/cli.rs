use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};
use std::io::Write;

const SUBCOMMANDS: &[&str] = &[
    "exact-h",
    "exact-e",
    "blowup-exact",
    "blowup-curve",
    "verify",
    "solve-elliptic",
    "gelfand",
    "blowup-approx",
    "march",
    "backlund",
    "action",
    "convert-log",
];

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_liouville"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn run_stdin(args: &[&str], input: &[u8]) -> Output {
    let mut child = bin().args(args).stdin(Stdio::piped()).stdout(Stdio::piped()).stderr(Stdio::piped()).spawn().unwrap();
    child.stdin.take().unwrap().write_all(input).unwrap();
    child.wait_with_output().unwrap()
}

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

/// Last non-empty line of the stream, parsed as the JSON summary.
fn summary(bytes: &[u8]) -> serde_json::Value {
    let text = String::from_utf8_lossy(bytes);
    let line = text.lines().rev().find(|l| l.starts_with('{')).expect("summary line");
    serde_json::from_str(line).unwrap()
}

#[test]
fn help_matches_golden_files() {
    let check = |args: &[&str], file: &str| {
        let out = run(args);
        assert!(out.status.success());
        let expected = std::fs::read(golden_dir().join(file)).unwrap();
        assert!(out.stdout == expected, "help for {args:?} differs from {file}");
    };
    check(&["--help"], "main.txt");
    for sub in SUBCOMMANDS {
        check(&[sub, "--help"], &format!("help-{sub}.txt"));
    }
}

#[test]
fn help_lists_defaults() {
    let text = String::from_utf8(run(&["solve-elliptic", "--help"]).stdout).unwrap();
    for flag in ["--geometry", "--n", "--domain", "--nx", "--ny", "--K", "--a", "--lambda", "--boundary", "--tol", "--max-iter"] {
        assert!(text.contains(flag), "{flag} missing");
    }
    assert!(text.contains("[default: 257]"));
}

#[test]
fn deterministic_output_across_runs_and_threads() {
    let cases: &[&[&str]] = &[
        &["exact-h", "--f", "exp(x)", "--g", "y^3", "--domain", "0.5", "0.5", "1.5", "1.5", "--nx", "33", "--ny", "17"],
        &["exact-e", "--seed", "z/2", "--K", "1", "--domain", "-0.5", "-0.5", "0.5", "0.5", "--nx", "21", "--ny", "21"],
        &["march", "--phi", "0.1*x", "--psi", "sin(y)", "--nx", "33", "--ny", "33"],
        &["backlund", "--phi", "x^2", "--psi", "0", "--domain", "0", "0", "0.3", "0.3", "--nx", "17", "--ny", "17"],
        &["solve-elliptic", "--geometry", "rect", "--nx", "17", "--ny", "17", "--K", "-1"],
        &["gelfand", "--n", "129"],
        &["blowup-approx", "--n", "129"],
    ];
    for args in cases {
        let a = run(args);
        let b = run(args);
        assert!(a.status.success(), "{args:?}: {}", String::from_utf8_lossy(&a.stderr));
        assert_eq!(a.stdout, b.stdout, "{args:?}");
        assert_eq!(a.stderr, b.stderr, "{args:?}");
        let mut threaded = vec!["--threads", "4"];
        threaded.extend_from_slice(args);
        let c = run(&threaded);
        assert!(c.status.success());
        let (da, dc) = (liouville::fields::read_field(&a.stdout[..]), liouville::fields::read_field(&c.stdout[..]));
        if let (Ok(fa), Ok(fc)) = (da, dc) {
            for (x, y) in fa.values.iter().zip(&fc.values) {
                assert!(x.to_bits().abs_diff(y.to_bits()) <= 4 || (x.is_nan() && y.is_nan()), "{args:?}");
            }
        }
    }
}

#[test]
fn pipeline_exact_into_verify() {
    let field = run(&["exact-h", "--f", "x", "--g", "y", "--K", "1", "--a", "1", "--domain", "0.5", "0.5", "1.5", "1.5", "--nx", "65", "--ny", "65"]);
    assert!(field.status.success());
    let s = summary(&field.stderr);
    assert_eq!(s["command"], "exact-h");
    assert_eq!(s["results"]["nx"], 65);
    let out = run_stdin(&["verify", "--eq", "hyperbolic"], &field.stdout);
    assert!(out.status.success());
    let s = summary(&out.stdout);
    assert_eq!(s["status"], "ok");
    assert!(s["results"]["max_abs"].as_f64().unwrap() <= 1e-3);
}

#[test]
fn gelfand_reports_fold() {
    let out = run(&["gelfand", "--geometry", "disk", "--n", "2049", "--out", "/dev/null"]);
    assert!(out.status.success());
    let s = summary(&out.stdout);
    assert!((s["results"]["lambda0"].as_f64().unwrap() - 2.0).abs() <= 1e-3);
    assert_eq!(s["inputs_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn singular_domain_exits_one() {
    let out = run(&["exact-h", "--f", "x", "--g", "y", "--domain", "-1", "-1", "1", "1"]);
    assert_eq!(out.status.code(), Some(1));
    let s = summary(&out.stdout);
    assert_eq!(s["status"], "error");
    assert_eq!(s["exit_code"], 1);
    assert_eq!(s["error"]["code"], "closedform.SingularNode");
}

#[test]
fn sign_error_exits_one() {
    let out = run(&["exact-h", "--f", "x", "--g=-y-3", "--domain", "0.5", "0.5", "1.5", "1.5"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(summary(&out.stdout)["error"]["code"], "closedform.SignError");
}

#[test]
fn nonconvergence_exits_two() {
    // the discrete fold sits just below λ = 2, so K = −2 has no solution
    let out = run(&["solve-elliptic", "--geometry", "disk", "--n", "65", "--K", "-2"]);
    assert_eq!(out.status.code(), Some(2));
    let s = summary(&out.stdout);
    assert_eq!(s["exit_code"], 2);
    assert_eq!(s["error"]["code"], "elliptic.NonConvergence");
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&["exact-h", "--f", "x"]).status.code(), Some(1));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(run(&["exact-h", "--f", "x +", "--g", "y"]).status.code(), Some(1));
    assert_eq!(run(&["--threads", "0", "gelfand", "--n", "65"]).status.code(), Some(1));
}

#[test]
fn field_files_round_trip_through_commands() {
    let dir = tempfile::tempdir().unwrap();
    let u = dir.path().join("u.csv");
    let t = dir.path().join("t.csv");
    let back = dir.path().join("back.csv");
    let us = u.to_str().unwrap();
    assert!(run(&["march", "--phi", "0", "--psi", "0", "--nx", "9", "--ny", "9", "--out", us]).status.success());
    assert!(run(&["convert-log", "--direction", "u-to-t", "--input", us, "--out", t.to_str().unwrap()]).status.success());
    assert!(run(&["convert-log", "--direction", "t-to-u", "--input", t.to_str().unwrap(), "--out", back.to_str().unwrap()])
        .status
        .success());
    let a = liouville::fields::read_field(std::fs::read(&u).unwrap().as_slice()).unwrap();
    let b = liouville::fields::read_field(std::fs::read(&back).unwrap().as_slice()).unwrap();
    for (x, y) in a.values.iter().zip(&b.values) {
        assert!((x - y).abs() <= 4.0 * f64::EPSILON * x.abs().max(1.0));
    }
    let out = run(&["verify", "--eq", "log", "--input", t.to_str().unwrap()]);
    assert!(out.status.success());
}

#[test]
fn action_command_checks_gradient() {
    let dir = tempfile::tempdir().unwrap();
    let u = dir.path().join("u.csv");
    let us = u.to_str().unwrap();
    assert!(run(&["exact-e", "--seed", "z", "--K", "1", "--domain", "-0.4", "-0.4", "0.4", "0.4", "--nx", "17", "--ny", "17", "--out", us])
        .status
        .success());
    let out = run(&["action", "--input", us, "--C", "2", "--mu", "1"]);
    assert!(out.status.success());
    let s = summary(&out.stdout);
    assert_eq!(s["results"]["gradient_checks"], 20);
    assert!(s["results"]["max_rel_err"].as_f64().unwrap() <= 1e-6);
}

#[test]
fn march_writes_mask() {
    let dir = tempfile::tempdir().unwrap();
    let mask = dir.path().join("mask.csv");
    let out = run(&[
        "march", "--phi", "ln(2/(x - 1)^2)", "--psi", "ln(2/(y - 1)^2)", "--domain", "-1", "-1", "0.9", "0.9", "--nx", "40", "--ny",
        "40", "--mask-out", mask.to_str().unwrap(), "--out", "/dev/null",
    ]);
    assert!(out.status.success());
    assert!(summary(&out.stdout)["results"]["masked"].as_u64().unwrap() > 0);
    let (_, m) = liouville::fields::read_mask(std::fs::read(&mask).unwrap().as_slice()).unwrap();
    assert!(m.iter().any(|&b| b) && m.iter().any(|&b| !b));
}

#[test]
fn usage_errors_print_a_summary() {
    let out = run(&["exact-h", "--f", "x"]);
    let s = summary(&out.stdout);
    assert_eq!(s["command"], "exact-h");
    assert_eq!(s["error"]["code"], "cli.Usage");
    assert!(s["error"]["message"].as_str().unwrap().contains("--g"));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage:"));
}
