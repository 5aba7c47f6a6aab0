//! Command-line driver. Every run prints one JSON summary line; see the
//! README for its schema.

mod commands;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::ffi::OsString;
use std::io::{BufRead, Write};

#[derive(Debug, Parser)]
#[command(name = "liouville", version, about = "Exact solutions, solvers and checks for the Liouville equations")]
pub struct Cli {
    /// Worker threads for internal parallelism
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    pub threads: u16,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Sample the two-function solution of u_xy = K e^{au}
    ExactH(ExactHArgs),
    /// Sample the one-seed solution of Δu = K e^{au}
    ExactE(ExactEArgs),
    /// Sample ln(8/(1 − r²)²), the boundary blow-up solution on the unit disk
    BlowupExact(BlowupExactArgs),
    /// Locate the singular curve f(x) + g(y) = 0
    BlowupCurve(BlowupCurveArgs),
    /// Residual norms of a field for one of the equation forms
    Verify(VerifyArgs),
    /// Newton solve of the Dirichlet problem for Δu = K e^{au}
    SolveElliptic(SolveEllipticArgs),
    /// Continue the Gelfand branch Δu + λe^u = 0 through its fold
    Gelfand(GelfandArgs),
    /// Solve Δu = e^u on the unit disk with u = M on the boundary, for each M
    BlowupApprox(BlowupApproxArgs),
    /// March u_xy = K e^{au} from Goursat data on the axes
    March(MarchArgs),
    /// Integrate the Bäcklund pair from a wave-equation solution
    Backlund(BacklundArgs),
    /// Liouville action value and gradient check
    Action(ActionArgs),
    /// Convert between u and the metric factor T = e^u
    ConvertLog(ConvertLogArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::ExactH(_) => "exact-h",
            Command::ExactE(_) => "exact-e",
            Command::BlowupExact(_) => "blowup-exact",
            Command::BlowupCurve(_) => "blowup-curve",
            Command::Verify(_) => "verify",
            Command::SolveElliptic(_) => "solve-elliptic",
            Command::Gelfand(_) => "gelfand",
            Command::BlowupApprox(_) => "blowup-approx",
            Command::March(_) => "march",
            Command::Backlund(_) => "backlund",
            Command::Action(_) => "action",
            Command::ConvertLog(_) => "convert-log",
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct GridArgs {
    /// Rectangle corners X0 Y0 X1 Y1 (length units)
    #[arg(long, num_args = 4, value_names = ["X0", "Y0", "X1", "Y1"], allow_negative_numbers = true,
          default_values_t = [0.0, 0.0, 1.0, 1.0])]
    pub domain: Vec<f64>,
    /// Nodes along x, including both ends
    #[arg(long, default_value_t = 65)]
    pub nx: usize,
    /// Nodes along y, including both ends
    #[arg(long, default_value_t = 65)]
    pub ny: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct ParamArgs {
    /// Coefficient K in K e^{au} (nonzero)
    #[arg(long = "K", default_value_t = 1.0, allow_negative_numbers = true)]
    pub k: f64,
    /// Exponent scale a in K e^{au} (nonzero)
    #[arg(long = "a", default_value_t = 1.0, allow_negative_numbers = true)]
    pub a: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct OutArgs {
    /// Output file; without it the data goes to stdout and the summary to stderr
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<std::path::PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ExactHArgs {
    /// f(x), an expression in x
    #[arg(long)]
    pub f: String,
    /// g(y), an expression in y
    #[arg(long)]
    pub g: String,
    #[command(flatten)]
    pub params: ParamArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignArg {
    Plus,
    Minus,
}

#[derive(Debug, Args, Serialize)]
pub struct ExactEArgs {
    /// Analytic seed F(z), an expression in z (may use i)
    #[arg(long)]
    pub seed: String,
    /// Denominator sign in (1 ∓ |F|²); defaults to minus when aK > 0, plus otherwise
    #[arg(long, value_enum)]
    pub sign: Option<SignArg>,
    #[command(flatten)]
    pub params: ParamArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct BlowupExactArgs {
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct BlowupCurveArgs {
    /// f(x), an expression in x
    #[arg(long)]
    pub f: String,
    /// g(y), monotone on the y range, an expression in y
    #[arg(long)]
    pub g: String,
    /// Sampled x interval X0 X1
    #[arg(long, num_args = 2, value_names = ["X0", "X1"], allow_negative_numbers = true, required = true)]
    pub x_range: Vec<f64>,
    /// Searched y interval Y0 Y1
    #[arg(long, num_args = 2, value_names = ["Y0", "Y1"], allow_negative_numbers = true, required = true)]
    pub y_range: Vec<f64>,
    /// Number of x samples
    #[arg(long, default_value_t = 101)]
    pub samples: usize,
    /// Root tolerance in y (length units)
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EqArg {
    /// u_xy = K e^{au} (cell-centre stencil)
    Hyperbolic,
    /// Δu = K e^{au} (5-point stencil)
    Elliptic,
    /// (1/T)∂²log T/∂x∂y = K, input is T
    Log,
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyArgs {
    /// Equation form to check
    #[arg(long, value_enum)]
    pub eq: EqArg,
    #[command(flatten)]
    pub params: ParamArgs,
    /// Field file to read ("-" for stdin)
    #[arg(long, default_value = "-")]
    #[serde(skip)]
    pub input: String,
    /// Also write the residual field here
    #[arg(long)]
    #[serde(skip)]
    pub residual_out: Option<std::path::PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum GeometryArg {
    /// Rectangle from --domain/--nx/--ny
    Rect,
    /// Unit disk, radial grid of --n nodes
    Disk,
}

#[derive(Debug, Args, Serialize)]
pub struct SolveEllipticArgs {
    #[arg(long, value_enum, default_value_t = GeometryArg::Rect)]
    pub geometry: GeometryArg,
    /// Radial nodes on [0, 1] (disk only)
    #[arg(long, default_value_t = 257)]
    pub n: usize,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub params: ParamArgs,
    /// Solve Δu + λe^u = 0 instead (overrides --K/--a)
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    /// Boundary values, an expression in (x, y); constant for the disk
    #[arg(long, default_value = "0")]
    pub boundary: String,
    /// Newton tolerance on the scaled max-residual
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Newton iteration cap
    #[arg(long, default_value_t = 50)]
    pub max_iter: usize,
    /// Write the solve report (JSON) here
    #[arg(long)]
    #[serde(skip)]
    pub report: Option<std::path::PathBuf>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct GelfandArgs {
    #[arg(long, value_enum, default_value_t = GeometryArg::Disk)]
    pub geometry: GeometryArg,
    /// Radial nodes on [0, 1] (disk only)
    #[arg(long, default_value_t = 2049)]
    pub n: usize,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Starting λ (≥ 0)
    #[arg(long, default_value_t = 0.0)]
    pub lambda_start: f64,
    /// Maximum continuation steps
    #[arg(long, default_value_t = 500)]
    pub max_steps: usize,
    /// Initial pseudo-arclength step
    #[arg(long, default_value_t = 0.05)]
    pub ds: f64,
    /// Stop once u at the centre exceeds this
    #[arg(long, default_value_t = 10.0)]
    pub u0_max: f64,
    /// Report u at the centre on both branches at these λ values (comma separated)
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub probe: Vec<f64>,
    /// Branch CSV (s,lambda,u0) file; without it the CSV goes to stdout
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct BlowupApproxArgs {
    /// Radial nodes on [0, 1]
    #[arg(long, default_value_t = 2049)]
    pub n: usize,
    /// Strictly increasing boundary values (comma separated)
    #[arg(long = "M", value_delimiter = ',', default_values_t = [5.0, 8.0, 11.0], allow_negative_numbers = true)]
    pub m: Vec<f64>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct MarchArgs {
    /// u(x, y0), an expression in x
    #[arg(long)]
    pub phi: String,
    /// u(x0, y), an expression in y
    #[arg(long)]
    pub psi: String,
    #[command(flatten)]
    pub params: ParamArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Nodes with u above this are masked as blown up
    #[arg(long, default_value_t = 25.0)]
    pub threshold: f64,
    /// Write the 0/1 blow-up mask here
    #[arg(long)]
    #[serde(skip)]
    pub mask_out: Option<std::path::PathBuf>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrderArg {
    XThenY,
    YThenX,
}

#[derive(Debug, Args, Serialize)]
pub struct BacklundArgs {
    /// x part of the wave solution w = phi(x) + psi(y)
    #[arg(long, default_value = "0")]
    pub phi: String,
    /// y part of the wave solution w = phi(x) + psi(y)
    #[arg(long, default_value = "0")]
    pub psi: String,
    /// Bäcklund constant A (nonzero)
    #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
    pub bt_a: f64,
    /// u at the corner (X0, Y0)
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub u_corner: f64,
    /// Integration path
    #[arg(long, value_enum, default_value_t = OrderArg::XThenY)]
    pub order: OrderArg,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct ActionArgs {
    /// Field file to read ("-" for stdin)
    #[arg(long, default_value = "-")]
    #[serde(skip)]
    pub input: String,
    /// Overall constant C (> 0)
    #[arg(long = "C", default_value_t = 1.0)]
    pub c: f64,
    /// Mass parameter μ (enters as μ²)
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub mu: f64,
    /// Interior nodes checked against central differences
    #[arg(long, default_value_t = 20)]
    pub checks: usize,
    /// Central-difference step (field units)
    #[arg(long, default_value_t = 1e-5)]
    pub eps: f64,
    /// Write the gradient field here
    #[arg(long)]
    #[serde(skip)]
    pub gradient_out: Option<std::path::PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DirectionArg {
    /// T = e^u
    UToT,
    /// u = ln T
    TToU,
}

#[derive(Debug, Args, Serialize)]
pub struct ConvertLogArgs {
    #[arg(long, value_enum)]
    pub direction: DirectionArg,
    /// Field file to read ("-" for stdin)
    #[arg(long, default_value = "-")]
    #[serde(skip)]
    pub input: String,
    #[command(flatten)]
    pub out: OutArgs,
}

/// A failed run: exit code, module-qualified error code and message.
#[derive(Debug)]
pub struct Failure {
    pub exit: i32,
    pub code: String,
    pub message: String,
}

impl Failure {
    pub(crate) fn validation(code: impl Into<String>, message: impl std::fmt::Display) -> Self {
        Failure { exit: 1, code: code.into(), message: message.to_string() }
    }

    pub(crate) fn nonconvergence(code: impl Into<String>, message: impl std::fmt::Display) -> Self {
        Failure { exit: 2, code: code.into(), message: message.to_string() }
    }
}

/// Leading identifier of a `Debug` rendering, i.e. the variant name.
pub(crate) fn variant<E: std::fmt::Debug>(e: &E) -> String {
    let s = format!("{e:?}");
    s.chars().take_while(|c| c.is_alphanumeric() || *c == '_').collect()
}

/// Streams given to [`run`].
pub struct Io<'a> {
    pub stdin: &'a mut dyn BufRead,
    pub stdout: &'a mut dyn Write,
    pub stderr: &'a mut dyn Write,
}

pub(crate) struct Outcome {
    pub results: serde_json::Value,
    /// Data went to stdout, so the summary must not.
    pub streamed: bool,
}

#[derive(Serialize)]
struct Summary<'a> {
    command: &'a str,
    status: &'a str,
    exit_code: i32,
    inputs_sha256: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    results: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<serde_json::Value>,
}

/// Parses `argv` and runs one subcommand; returns the process exit code.
pub fn run<I, T>(argv: I, io: Io) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let rendered = e.render().to_string();
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = io.stdout.write_all(rendered.as_bytes());
                return 0;
            }
            let _ = io.stderr.write_all(rendered.as_bytes());
            // the subcommand is the first argument that names one
            let name = argv
                .iter()
                .skip(1)
                .filter_map(|a| a.to_str())
                .find(|a| Cli::command().find_subcommand(a).is_some())
                .unwrap_or("")
                .to_string();
            let mut hasher = Sha256::new();
            for a in argv.iter().skip(1) {
                hasher.update(a.as_encoded_bytes());
                hasher.update([0]);
            }
            let message = rendered
                .lines()
                .take_while(|l| !l.trim().is_empty())
                .map(str::trim)
                .collect::<Vec<_>>()
                .join(" ")
                .trim_start_matches("error: ")
                .to_string();
            let failure = Failure { exit: 1, code: "cli.Usage".into(), message };
            return finish(&name, Err(failure), hasher, Io { stdin: io.stdin, stdout: io.stdout, stderr: &mut std::io::sink() });
        }
    };
    let name = cli.command.name();
    let mut hasher = Sha256::new();
    hasher.update(name.as_bytes());
    hasher.update(serde_json::to_vec(&cli.command).unwrap_or_default());

    // the worker pool needs Send data, so stdin is read up front and
    // stdout buffered
    let reads_stdin = match &cli.command {
        Command::Verify(a) => a.input == "-",
        Command::Action(a) => a.input == "-",
        Command::ConvertLog(a) => a.input == "-",
        _ => false,
    };
    let mut input = Vec::new();
    if reads_stdin {
        if let Err(e) = io.stdin.read_to_end(&mut input) {
            return finish(name, Err(Failure::validation("cli.Io", e)), hasher, io);
        }
    }
    let mut buffer = Vec::new();
    let result = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads as usize).build() {
        Ok(pool) => pool.install(|| commands::dispatch(&cli.command, &mut input.as_slice(), &mut buffer, &mut hasher)),
        Err(e) => Err(Failure::validation("cli.Threads", e)),
    };
    let _ = io.stdout.write_all(&buffer);
    finish(name, result, hasher, io)
}

fn finish(name: &str, outcome: Result<Outcome, Failure>, hasher: Sha256, io: Io) -> i32 {
    let digest = hex::encode(hasher.finalize());
    let (summary, exit, streamed) = match outcome {
        Ok(o) => (
            Summary { command: name, status: "ok", exit_code: 0, inputs_sha256: digest, results: Some(o.results), error: None },
            0,
            o.streamed,
        ),
        Err(f) => {
            let _ = writeln!(io.stderr, "error: {}", f.message);
            (
                Summary {
                    command: name,
                    status: "error",
                    exit_code: f.exit,
                    inputs_sha256: digest,
                    results: None,
                    error: Some(serde_json::json!({ "code": f.code, "message": f.message })),
                },
                f.exit,
                false,
            )
        }
    };
    let line = serde_json::to_string(&summary).unwrap_or_else(|_| "{}".into());
    let sink: &mut dyn Write = if streamed { io.stderr } else { io.stdout };
    let _ = writeln!(sink, "{line}");
    let _ = sink.flush();
    exit
}
