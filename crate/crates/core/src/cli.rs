//! The `oriflag` command-line front end.
//!
//! Every command writes one report to stdout: a JSON object tagged with
//! `"schema": 1` (reals printed with 17 significant digits) or CSV. With
//! `--manifest <path>` a run manifest recording the inputs, the tool version,
//! the wall time and the report is written as well.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 unparseable input, 3 a space
//! or mode the command cannot handle.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Number, Value};

use crate::analytic::{
    analytic_expected_distance, expected_distance_full_flag, expected_distance_full_flag_hyperspherical,
    expected_distance_full_flag_join, expected_distance_partial_flag_integral, numeric_volume, SolvedSpace,
};
use crate::error::{Error, Result};
use crate::flagspec::{flag_volume, FlagSpec};
use crate::montecarlo::{
    estimate_with, normalize3, sphere_point, EstimateConfig, Execution, Space,
};
use crate::orthogonal::{random_special_orthogonal_with, Orthogonalization, Rotation, RngStream};
use crate::quadrature::QuadratureResult;
use crate::quatcover::rotation_to_quaternion;

pub const SCHEMA_VERSION: u64 = 1;
pub const DEFAULT_WORKERS: usize = 8;

#[derive(Debug, Parser)]
#[command(name = "oriflag", version, about = "Volumes and expected distances on partially oriented flag manifolds")]
pub struct Cli {
    /// Also write a JSON run manifest to this path.
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo estimate of the expected distance.
    Estimate(EstimateArgs),
    /// Closed-form expected distance.
    Analytic(SpaceArg),
    /// Complete-flag expected distance by adaptive quadrature.
    Quadrature(QuadratureArgs),
    /// Exact (and optionally numeric) volume.
    Volume(VolumeArgs),
    /// Expected distance by any method, or the comparison table with `--all`.
    Expected(ExpectedArgs),
    /// Random points of a space.
    Sample(SampleArgs),
    /// Monte Carlo means for an increasing list of sample sizes, as CSV.
    Convergence(ConvergenceArgs),
}

#[derive(Debug, Args)]
pub struct SpaceArg {
    /// `so3`, `s2`, `rp2`, `full-flag`, `partial-flag-<i>`, `trivial-flag`,
    /// `so<n>`, or a spec such as "lambda=1,1,1 P={1}{2,3}".
    #[arg(long)]
    pub space: String,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Number of samples.
    #[arg(long = "n", default_value_t = 1_000_000)]
    pub n: u64,
    #[arg(long, env = "ORIFLAG_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Independent random streams; results depend on this, not on thread count.
    #[arg(long, default_value_t = DEFAULT_WORKERS)]
    pub workers: usize,
    /// Draw both points at random.
    #[arg(long)]
    pub two_point: bool,
    #[arg(long, value_enum, default_value_t = MethodArg::Householder)]
    pub method: MethodArg,
    /// Run the chunks on the current thread.
    #[arg(long)]
    pub sequential: bool,
}

impl RunArgs {
    fn config(&self) -> EstimateConfig {
        EstimateConfig::new(self.n, self.seed)
            .workers(self.workers)
            .two_point(self.two_point)
            .orthogonalization(self.method.into())
            .execution(if self.sequential {
                Execution::Sequential
            } else {
                Execution::default()
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Householder,
    GramSchmidt,
}

impl From<MethodArg> for Orthogonalization {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Householder => Orthogonalization::Householder,
            MethodArg::GramSchmidt => Orthogonalization::GramSchmidt,
        }
    }
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub space: SpaceArg,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Integral {
    /// The one-dimensional integral.
    Line,
    /// Triple integral in join coordinates.
    Join,
    /// Triple integral in hyperspherical coordinates.
    Hyperspherical,
}

#[derive(Debug, Args)]
pub struct QuadratureArgs {
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[arg(long, value_enum, default_value_t = Integral::Line)]
    pub integral: Integral,
}

#[derive(Debug, Args)]
pub struct VolumeArgs {
    #[arg(long, conflicts_with_all = ["lambda", "partition"])]
    pub space: Option<String>,
    /// Ordered partition, e.g. `1,1,1`.
    #[arg(long, required_unless_present = "space")]
    pub lambda: Option<String>,
    /// Set partition of the indices, e.g. "{1}{2,3}"; defaults to one block.
    #[arg(long = "P", requires = "lambda")]
    pub partition: Option<String>,
    /// Also integrate the volume form numerically.
    #[arg(long)]
    pub numeric: bool,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Analytic,
    Quadrature,
    Montecarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct ExpectedArgs {
    #[arg(long, required_unless_present = "all")]
    pub space: Option<String>,
    /// Compare closed forms with Monte Carlo on every space built from SO(3).
    #[arg(long, conflicts_with = "space")]
    pub all: bool,
    #[arg(long, value_enum, default_value_t = Mode::Analytic)]
    pub mode: Mode,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub space: SpaceArg,
    #[arg(long = "n", default_value_t = 1)]
    pub n: u64,
    #[arg(long, env = "ORIFLAG_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Emit the lift to S³ (x ≥ 0 hemisphere) instead of the matrix.
    #[arg(long)]
    pub quaternion: bool,
    #[arg(long, value_enum, default_value_t = MethodArg::Householder)]
    pub method: MethodArg,
}

#[derive(Debug, Args)]
pub struct ConvergenceArgs {
    #[command(flatten)]
    pub space: SpaceArg,
    /// Increasing sample sizes, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1000,10000,100000")]
    pub ns: Vec<u64>,
    #[arg(long, env = "ORIFLAG_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_WORKERS)]
    pub workers: usize,
}

/// A finished report.
#[derive(Debug, Clone, PartialEq)]
pub enum Report {
    Json(Value),
    Text(String),
}

impl Report {
    fn payload(&self) -> Value {
        match self {
            Report::Json(v) => v.clone(),
            Report::Text(s) => Value::String(s.clone()),
        }
    }
}

/// A real number with 17 significant digits; non-finite values become `null`.
pub fn real(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    format!("{x:.16e}")
        .parse::<Number>()
        .map(Value::Number)
        .unwrap_or(Value::Null)
}

fn csv_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn with_schema(fields: Value) -> Value {
    let mut out = Map::new();
    out.insert("schema".into(), json!(SCHEMA_VERSION));
    if let Value::Object(m) = fields {
        out.extend(m);
    }
    Value::Object(out)
}

fn quadrature_json(r: &QuadratureResult) -> Value {
    json!({
        "value": real(r.value),
        "abs_error_bound": real(r.abs_error_bound),
        "evaluations": r.evaluations,
    })
}

fn parse_space(text: &str) -> Result<Space> {
    text.parse()
}

fn cmd_estimate(args: &EstimateArgs) -> Result<Report> {
    let space = parse_space(&args.space.space)?;
    let est = estimate_with(&space, &args.run.config())?;
    Ok(Report::Json(with_schema(json!({
        "command": "estimate",
        "space": space.to_string(),
        "mean": real(est.mean),
        "stderr": real(est.stderr),
        "n": est.n_samples,
        "seed": est.seed,
        "workers": args.run.workers,
        "two_point": args.run.two_point,
    }))))
}

fn closed_form_json(space: &Space) -> Result<Value> {
    let c = analytic_expected_distance(space)?;
    Ok(json!({
        "tag": c.tag.as_str(),
        "exact": c.exact.map(|e| e.to_string()),
        "value": real(c.value),
    }))
}

fn cmd_analytic(args: &SpaceArg) -> Result<Report> {
    let space = parse_space(&args.space)?;
    let mut body = closed_form_json(&space)?;
    body["command"] = json!("analytic");
    body["space"] = json!(space.to_string());
    Ok(Report::Json(with_schema(body)))
}

fn full_flag_quadrature(tol: f64, integral: Integral) -> Result<QuadratureResult> {
    match integral {
        Integral::Line => expected_distance_full_flag(tol),
        Integral::Join => expected_distance_full_flag_join(tol),
        Integral::Hyperspherical => expected_distance_full_flag_hyperspherical(tol),
    }
}

fn cmd_quadrature(args: &QuadratureArgs) -> Result<Report> {
    let r = full_flag_quadrature(args.tol, args.integral)?;
    let mut body = quadrature_json(&r);
    body["command"] = json!("quadrature");
    body["space"] = json!("full-flag");
    body["tol"] = real(args.tol);
    Ok(Report::Json(with_schema(body)))
}

fn cmd_volume(args: &VolumeArgs) -> Result<Report> {
    let spec: FlagSpec = match (&args.space, &args.lambda) {
        (Some(text), _) if text.contains("lambda=") => text.parse()?,
        (Some(text), _) => parse_space(text)?.flag_spec(),
        (None, Some(lambda)) => {
            let p = args.partition.as_deref().unwrap_or("");
            if p.is_empty() {
                format!("lambda={lambda}").parse()?
            } else {
                format!("lambda={lambda} P={p}").parse()?
            }
        }
        (None, None) => return Err(Error::Parse("either --space or --lambda is required".into())),
    };
    let exact = flag_volume(&spec);
    let value = exact.to_f64();
    let mut body = json!({
        "command": "volume",
        "spec": serde_json::from_str::<Value>(&spec.to_json()).map_err(|e| Error::Parse(e.to_string()))?,
        "exact": exact.to_string(),
        "value": real(value),
    });
    if args.numeric {
        let space = Space::from_flag_spec(&spec)?;
        let r = numeric_volume(&space, args.tol)?;
        let mut numeric = quadrature_json(&r);
        numeric["discrepancy"] = real((r.value - value).abs());
        body["numeric"] = numeric;
    }
    Ok(Report::Json(with_schema(body)))
}

fn quadrature_for(space: &Space, tol: f64) -> Result<QuadratureResult> {
    match SolvedSpace::classify(space)? {
        SolvedSpace::FullFlag => expected_distance_full_flag(tol),
        SolvedSpace::PartialFlag => expected_distance_partial_flag_integral(tol),
        _ => Err(Error::UnsupportedSpace(format!("{space}: no quadrature route"))),
    }
}

const TABLE_SPACES: [&str; 8] = [
    "so3",
    "s2",
    "rp2",
    "partial-flag-1",
    "partial-flag-2",
    "partial-flag-3",
    "full-flag",
    "trivial-flag",
];

fn comparison_table(args: &ExpectedArgs) -> Result<Report> {
    let cfg = args.run.config();
    let mut rows = Vec::new();
    for name in TABLE_SPACES {
        let space = parse_space(name)?;
        let closed = analytic_expected_distance(&space)?;
        let est = estimate_with(&space, &cfg)?;
        let delta = (est.mean - closed.value).abs();
        rows.push((name, closed, est, delta));
    }
    Ok(match args.format {
        Format::Csv => {
            let mut out = String::from("space,analytic_tag,analytic,mean,stderr,abs_error\n");
            for (name, closed, est, delta) in &rows {
                out.push_str(&format!(
                    "{name},{},{},{},{},{}\n",
                    closed.tag,
                    csv_real(closed.value),
                    csv_real(est.mean),
                    csv_real(est.stderr),
                    csv_real(*delta)
                ));
            }
            Report::Text(out)
        }
        Format::Json => Report::Json(with_schema(json!({
            "command": "expected",
            "mode": "all",
            "n": args.run.n,
            "seed": args.run.seed,
            "workers": args.run.workers,
            "rows": rows.iter().map(|(name, closed, est, delta)| json!({
                "space": name,
                "analytic_tag": closed.tag.as_str(),
                "analytic": real(closed.value),
                "mean": real(est.mean),
                "stderr": real(est.stderr),
                "abs_error": real(*delta),
            })).collect::<Vec<_>>(),
        }))),
    })
}

fn cmd_expected(args: &ExpectedArgs) -> Result<Report> {
    if args.all {
        return comparison_table(args);
    }
    let text = args.space.as_deref().unwrap_or_default();
    let space = parse_space(text)?;
    let mut body = match args.mode {
        Mode::Analytic => closed_form_json(&space)?,
        Mode::Quadrature => quadrature_json(&quadrature_for(&space, args.tol)?),
        Mode::Montecarlo => {
            let est = estimate_with(&space, &args.run.config())?;
            json!({
                "value": real(est.mean),
                "stderr": real(est.stderr),
                "n": est.n_samples,
                "seed": est.seed,
                "workers": args.run.workers,
            })
        }
    };
    body["command"] = json!("expected");
    body["space"] = json!(space.to_string());
    body["mode"] = json!(match args.mode {
        Mode::Analytic => "analytic",
        Mode::Quadrature => "quadrature",
        Mode::Montecarlo => "montecarlo",
    });
    Ok(Report::Json(with_schema(body)))
}

fn sample_rows(args: &SampleArgs, space: &Space) -> Result<Vec<Vec<f64>>> {
    if args.n == 0 {
        return Err(Error::InvalidArgument("--n must be at least 1".into()));
    }
    let mut rng = RngStream::new(args.seed, 0);
    let method = args.method.into();
    (0..args.n)
        .map(|_| match space {
            Space::Sphere2 | Space::ProjectivePlane2 => {
                if args.quaternion {
                    return Err(Error::UnsupportedSpace(format!("{space}: no quaternion lift")));
                }
                let v = sphere_point(&mut rng);
                // ℝP² points are emitted on the upper hemisphere.
                let v = if matches!(space, Space::ProjectivePlane2) && v[2] < 0.0 {
                    normalize3([-v[0], -v[1], -v[2]])?
                } else {
                    v
                };
                Ok(v.to_vec())
            }
            _ => {
                let n = space.ambient_dim();
                let r = match space {
                    Space::Point(_) => Rotation::identity(n),
                    _ => random_special_orthogonal_with(n, &mut rng, method)?,
                };
                if args.quaternion {
                    if n != 3 {
                        return Err(Error::UnsupportedSpace(format!("{space}: quaternion lift needs n = 3")));
                    }
                    Ok(rotation_to_quaternion(&r)?.components().to_vec())
                } else {
                    Ok(r.rows().concat())
                }
            }
        })
        .collect()
}

fn cmd_sample(args: &SampleArgs) -> Result<Report> {
    let space = parse_space(&args.space.space)?;
    let rows = sample_rows(args, &space)?;
    let mut out = String::new();
    match args.format {
        Format::Csv => {
            for row in rows {
                let cells: Vec<String> = row.into_iter().map(csv_real).collect();
                out.push_str(&cells.join(","));
                out.push('\n');
            }
        }
        Format::Json => {
            let key = match (&space, args.quaternion) {
                (_, true) => "quaternion",
                (Space::Sphere2 | Space::ProjectivePlane2, _) => "point",
                _ => "matrix",
            };
            let dim = space.ambient_dim();
            for row in rows {
                let value = if key == "matrix" {
                    Value::Array(
                        row.chunks(dim)
                            .map(|r| Value::Array(r.iter().map(|&x| real(x)).collect()))
                            .collect(),
                    )
                } else {
                    Value::Array(row.into_iter().map(real).collect())
                };
                let line = json!({"schema": SCHEMA_VERSION, key: value});
                out.push_str(&line.to_string());
                out.push('\n');
            }
        }
    }
    Ok(Report::Text(out))
}

fn cmd_convergence(args: &ConvergenceArgs) -> Result<Report> {
    let space = parse_space(&args.space.space)?;
    if args.ns.is_empty() || args.ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("--ns must be a strictly increasing list".into()));
    }
    let reference = analytic_expected_distance(&space).ok().map(|c| c.value);
    let mut out = String::from("n,mean,stderr,abs_error\n");
    for &n in &args.ns {
        let est = estimate_with(&space, &EstimateConfig::new(n, args.seed).workers(args.workers))?;
        let err = reference.map(|r| csv_real((est.mean - r).abs())).unwrap_or_default();
        out.push_str(&format!("{n},{},{},{err}\n", csv_real(est.mean), csv_real(est.stderr)));
    }
    Ok(Report::Text(out))
}

/// Runs one parsed command.
pub fn execute(command: &Command) -> Result<Report> {
    match command {
        Command::Estimate(a) => cmd_estimate(a),
        Command::Analytic(a) => cmd_analytic(a),
        Command::Quadrature(a) => cmd_quadrature(a),
        Command::Volume(a) => cmd_volume(a),
        Command::Expected(a) => cmd_expected(a),
        Command::Sample(a) => cmd_sample(a),
        Command::Convergence(a) => cmd_convergence(a),
    }
}

fn command_name(command: &Command) -> &'static str {
    match command {
        Command::Estimate(_) => "estimate",
        Command::Analytic(_) => "analytic",
        Command::Quadrature(_) => "quadrature",
        Command::Volume(_) => "volume",
        Command::Expected(_) => "expected",
        Command::Sample(_) => "sample",
        Command::Convergence(_) => "convergence",
    }
}

/// Inputs that identify a run, for the manifest.
fn run_inputs(command: &Command) -> Value {
    let run = |r: &RunArgs| json!({"n": r.n, "seed": r.seed, "workers": r.workers});
    match command {
        Command::Estimate(a) => {
            let mut v = run(&a.run);
            v["space"] = json!(a.space.space);
            v
        }
        Command::Expected(a) => {
            let mut v = run(&a.run);
            v["space"] = json!(a.space.clone().unwrap_or_else(|| "all".into()));
            v
        }
        Command::Analytic(a) => json!({"space": a.space}),
        Command::Quadrature(a) => json!({"space": "full-flag", "tol": real(a.tol)}),
        Command::Volume(a) => json!({"space": a.space, "lambda": a.lambda, "P": a.partition}),
        Command::Sample(a) => json!({"space": a.space.space, "n": a.n, "seed": a.seed}),
        Command::Convergence(a) => json!({"space": a.space.space, "ns": a.ns, "seed": a.seed, "workers": a.workers}),
    }
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Parse(_) | Error::InvalidPartition(_) | Error::InvalidSetPartition(_) => 2,
        Error::UnsupportedSpace(_) | Error::InfiniteIsotropy(_) => 3,
        _ => 1,
    }
}

fn write_report(report: &Report, out: &mut dyn Write) -> io::Result<()> {
    match report {
        Report::Json(v) => writeln!(out, "{v}"),
        Report::Text(s) => out.write_all(s.as_bytes()),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    let started = Instant::now();
    let report = match execute(&cli.command) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return exit_code(&e);
        }
    };
    let wall_time = started.elapsed().as_secs_f64();
    if let Err(e) = write_report(&report, out) {
        let _ = writeln!(err, "error: {e}");
        return 1;
    }
    if let Some(path) = &cli.manifest {
        let manifest = json!({
            "schema": SCHEMA_VERSION,
            "command": command_name(&cli.command),
            "inputs": run_inputs(&cli.command),
            "version": env!("CARGO_PKG_VERSION"),
            "wall_time_seconds": real(wall_time),
            "result": report.payload(),
        });
        let text = serde_json::to_string_pretty(&manifest).expect("serializable");
        if let Err(e) = fs::write(path, text + "\n") {
            let _ = writeln!(err, "error: cannot write manifest {}: {e}", path.display());
            return 1;
        }
    }
    0
}

pub fn main() -> i32 {
    let stdout = io::stdout();
    let stderr = io::stderr();
    run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}
