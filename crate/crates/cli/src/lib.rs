//! The `vi` command: solve and diagnose variational inequalities from the
//! terminal.
//!
//! Exit codes: `0` when every requested run converged or every check passed,
//! `2` when a solve did not converge or a check failed, `1` on usage, input
//! or IO errors.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::Path;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use serde_json::{json, Value};
use vi_core::diagnostics::{
    angle_probe, coercivity_probe, minty_certificate, monotonicity_probe, nonsingularity_scan,
    strong_minty_via_perturbation, ProbePoints, RayProbeSpec, DEFAULT_ZERO_BAND,
};
use vi_core::problems::{self, LoadError};
use vi_core::sampling::sample_points;
use vi_core::{
    solve, ConvexSet, DiagnosticsReport, MapKind, Method, ReferenceMapping, Sampling, Scheme,
    SolverConfig, Status, Verdict, ViProblem,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAIL: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "vi", version, about = "Projection methods and existence checks for variational inequalities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the Korpelevich or Popov method.
    Solve(SolveArgs),
    /// Run sampled certificates on a problem.
    Diagnose(DiagnoseArgs),
    /// List the built-in problems.
    List,
    /// Check a problem document.
    Validate {
        file: String,
    },
}

#[derive(Debug, Args)]
struct ProblemArgs {
    /// Built-in problem name or path to a JSON problem document.
    #[arg(long)]
    problem: String,
    /// Dimension for built-ins that accept one.
    #[arg(long)]
    dim: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Korpelevich,
    Popov,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long, value_enum)]
    method: MethodArg,
    /// Stepsize; defaults to 0.9 of the admissible bound.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 100_000)]
    max_iters: usize,
    /// Starting point, comma separated; defaults to the projection of
    /// (1, -1, 1, ...).
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<String>,
    /// Popov starting extrapolation point; defaults to x0.
    #[arg(long, allow_hyphen_values = true)]
    y0: Option<String>,
    /// Reference point for the dist_to_ref column.
    #[arg(long, allow_hyphen_values = true)]
    minty_reference: Option<String>,
    /// Run even when alpha violates the stepsize bound.
    #[arg(long)]
    allow_large_step: bool,
    /// Seed for Lipschitz estimation when no constant is known.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<String>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Check {
    Monotonicity,
    Minty,
    StrongMinty,
    Lipschitz,
    Coercivity,
    Angle,
    Nonsingularity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SchemeArg {
    Halton,
    Grid,
}

#[derive(Debug, Args)]
struct DiagnoseArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long, value_enum, value_delimiter = ',', required = true)]
    checks: Vec<Check>,
    /// Candidate for the Minty check; defaults to the first known Minty point.
    #[arg(long, allow_hyphen_values = true)]
    minty_candidate: Option<String>,
    /// Strong Minty modulus for the Minty check.
    #[arg(long, default_value_t = 0.0)]
    eta: f64,
    /// Perturbation size d for strong-minty (reference: the identity map).
    #[arg(long, default_value_t = 0.5)]
    perturbation: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, value_enum, default_value_t = SchemeArg::Halton)]
    scheme: SchemeArg,
    /// Half-width of the sampling cube when K is unbounded.
    #[arg(long, default_value_t = 2.0)]
    radius: f64,
    #[arg(long)]
    out: Option<String>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

/// A failure that ends the run with a message and an exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

fn usage(message: impl std::fmt::Display) -> Failure {
    Failure { code: EXIT_USAGE, message: message.to_string() }
}

fn load_message(e: &LoadError) -> String {
    format!("invalid problem document: {} at {}: {}", e.code, e.path, e.message)
}

struct Loaded {
    problem: ViProblem,
    builtin: Option<String>,
}

fn load_problem(args: &ProblemArgs) -> Result<Loaded, Failure> {
    if problems::CATALOG.contains(&args.problem.as_str()) {
        let p = match args.dim {
            Some(d) => problems::builtin_with_dim(&args.problem, d),
            None => problems::builtin(&args.problem),
        }
        .map_err(usage)?;
        return Ok(Loaded { problem: p, builtin: Some(args.problem.clone()) });
    }
    let path = Path::new(&args.problem);
    if !path.is_file() {
        return Err(usage(format!(
            "unknown problem `{}` (not a built-in name or a readable file)",
            args.problem
        )));
    }
    if args.dim.is_some() {
        return Err(usage("--dim only applies to built-in problems"));
    }
    let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", args.problem)))?;
    let problem = problems::from_json(&text).map_err(|e| usage(load_message(&e)))?;
    Ok(Loaded { problem, builtin: None })
}

fn parse_vector(flag: &str, text: &str, dim: usize) -> Result<DVector<f64>, Failure> {
    let values: Result<Vec<f64>, _> = text.split(',').map(|s| s.trim().parse::<f64>()).collect();
    let values = values.map_err(|e| usage(format!("--{flag}: {e}")))?;
    if values.len() != dim {
        return Err(usage(format!("--{flag}: expected {dim} components, got {}", values.len())));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(usage(format!("--{flag}: components must be finite")));
    }
    Ok(DVector::from_vec(values))
}

fn write_output(out: &Option<String>, body: &str, stdout: &mut dyn Write) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, body).map_err(|e| usage(format!("cannot write {path}: {e}"))),
        None => stdout.write_all(body.as_bytes()).map_err(|e| usage(format!("cannot write output: {e}"))),
    }
}

fn solve_cmd(args: &SolveArgs, stdout: &mut dyn Write, info: &mut dyn Write) -> Result<i32, Failure> {
    let loaded = load_problem(&args.problem)?;
    let p = &loaded.problem;
    let dim = p.dim();
    let method = match args.method {
        MethodArg::Korpelevich => Method::Korpelevich,
        MethodArg::Popov => Method::Popov,
    };
    let x0 = match &args.x0 {
        Some(s) => parse_vector("x0", s, dim)?,
        None => {
            let alt = DVector::from_fn(dim, |i, _| if i % 2 == 0 { 1.0 } else { -1.0 });
            p.set().project(&alt).map_err(usage)?
        }
    };
    if args.y0.is_some() && method != Method::Popov {
        return Err(usage("--y0 only applies to --method popov"));
    }
    let mut cfg = SolverConfig::new(method, x0)
        .tol(args.tol)
        .max_iters(args.max_iters)
        .allow_large_step(args.allow_large_step);
    cfg.alpha = args.alpha;
    cfg.seed = args.seed;
    if let Some(s) = &args.y0 {
        cfg = cfg.y0(parse_vector("y0", s, dim)?);
    }
    if let Some(s) = &args.minty_reference {
        cfg = cfg.minty_reference(parse_vector("minty-reference", s, dim)?);
    }
    log::info!("solving {} with {}", p.name(), method.as_str());
    let trace = solve(p, &cfg).map_err(usage)?;
    let h = &trace.header;
    let source = serde_json::to_value(h.step_source).expect("serializes");
    writeln!(
        info,
        "problem {} method {} alpha {:e} ({}) seed {}",
        loaded.builtin.as_deref().unwrap_or(p.name()),
        method.as_str(),
        h.alpha,
        source.as_str().unwrap_or_default(),
        args.seed
    )
    .ok();
    for w in &h.warnings {
        writeln!(info, "warning: {w}").ok();
    }
    writeln!(
        info,
        "status {} iterations {} final_residual {:e}",
        trace.status.as_str(),
        trace.iterations,
        trace.final_residual
    )
    .ok();
    let body = match args.format {
        Format::Csv => trace.to_csv(),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&trace.summary()).expect("summary serializes");
            s.push('\n');
            s
        }
    };
    write_output(&args.out, &body, stdout)?;
    Ok(if trace.status == Status::Converged { EXIT_OK } else { EXIT_FAIL })
}

fn sample_region(loaded: &Loaded, radius: f64) -> Result<ConvexSet, Failure> {
    let p = &loaded.problem;
    if let Some(name) = &loaded.builtin {
        let data = problems::reference_data_with_dim(name, p.dim()).map_err(usage)?;
        return Ok(data.sample_region);
    }
    if p.set().is_bounded() {
        return Ok(p.set().clone());
    }
    if radius.is_nan() || radius <= 0.0 {
        return Err(usage("--radius must be positive"));
    }
    ConvexSet::cube(p.dim(), -radius, radius).map_err(usage)
}

fn lipschitz_report(p: &ViProblem, region: &ConvexSet, sampling: &Sampling) -> Result<DiagnosticsReport, Failure> {
    let est = p.estimate_lipschitz(region, sampling.samples.max(2), sampling.seed).map_err(usage)?;
    let mut r = DiagnosticsReport::new("lipschitz")
        .param("samples", est.pairs as u64)
        .param("seed", est.seed);
    r.metric("sampled_lower_bound", est.lower_bound);
    match p.lipschitz() {
        Some(l) => {
            r.metric("declared", l);
            r.verdict = if est.lower_bound <= l * (1.0 + 1e-12) { Verdict::Pass } else { Verdict::Fail };
            if r.failed() {
                r.note("sampled difference quotient exceeds the declared constant");
            }
        }
        None => r.note("no declared constant to compare against"),
    }
    Ok(r)
}

fn run_check(
    check: Check,
    args: &DiagnoseArgs,
    loaded: &Loaded,
    region: &ConvexSet,
    sampling: &Sampling,
) -> Result<DiagnosticsReport, Failure> {
    let p = &loaded.problem;
    let dim = p.dim();
    let origin = DVector::zeros(dim);
    let report = match check {
        Check::Monotonicity => monotonicity_probe(p, region, sampling),
        Check::Minty => {
            let candidate = match &args.minty_candidate {
                Some(s) => parse_vector("minty-candidate", s, dim)?,
                None => match p.metadata().known_minty_solutions.first() {
                    Some(m) => DVector::from_column_slice(m),
                    None => return Err(usage("minty check needs --minty-candidate")),
                },
            };
            minty_certificate(p, &candidate, args.eta, region, sampling)
        }
        Check::StrongMinty => {
            let x_ref = p.set().project(&origin).map_err(usage)?;
            let reference = ReferenceMapping::identity().with_solution(x_ref);
            strong_minty_via_perturbation(p, &reference, args.perturbation, region, sampling)
        }
        Check::Lipschitz => return lipschitz_report(p, region, sampling),
        Check::Coercivity => {
            let spec = RayProbeSpec::coordinate(origin, vec![10.0, 100.0, 1000.0, 10000.0]).map_err(usage)?;
            coercivity_probe(MapKind::Mapping, p, &spec, 1e-3)
        }
        Check::Angle => {
            let spec = RayProbeSpec::scattered(origin, vec![10.0, 100.0, 1000.0], 16, args.seed).map_err(usage)?;
            angle_probe(p, &spec)
        }
        Check::Nonsingularity => {
            let points = sample_points(region, sampling).map_err(usage)?;
            nonsingularity_scan(p, &ProbePoints::Points(points), DEFAULT_ZERO_BAND, 1e-12)
        }
    };
    report.map_err(usage)
}

fn fmt_points(points: &[Vec<f64>]) -> String {
    points
        .iter()
        .map(|p| format!("({})", p.iter().map(|v| format!("{v:e}")).collect::<Vec<_>>().join(", ")))
        .collect::<Vec<_>>()
        .join(" ")
}

fn diagnose_cmd(args: &DiagnoseArgs, stdout: &mut dyn Write, info: &mut dyn Write) -> Result<i32, Failure> {
    if args.format != Format::Json {
        return Err(usage("diagnose writes json only"));
    }
    if args.samples == 0 {
        return Err(usage("--samples must be positive"));
    }
    let loaded = load_problem(&args.problem)?;
    let region = sample_region(&loaded, args.radius)?;
    let sampling = Sampling {
        samples: args.samples,
        seed: args.seed,
        scheme: match args.scheme {
            SchemeArg::Halton => Scheme::Halton,
            SchemeArg::Grid => Scheme::Grid,
        },
    };
    let mut reports = Vec::new();
    for &check in &args.checks {
        let r = run_check(check, args, &loaded, &region, &sampling)?;
        let name = serde_json::to_value(check_name(check)).expect("serializes");
        let verdict = serde_json::to_value(r.verdict).expect("serializes");
        write!(info, "{}: {}", name.as_str().unwrap_or_default(), verdict.as_str().unwrap_or_default()).ok();
        if let (Verdict::Fail, Some(w)) = (r.verdict, r.first_witness()) {
            write!(info, " (witness {} value {:e})", fmt_points(&w.points), w.value).ok();
        }
        writeln!(info).ok();
        reports.push(r);
    }
    let any_fail = reports.iter().any(|r| r.failed());
    let doc = json!({
        "problem": loaded.builtin.as_deref().unwrap_or(args.problem.problem.as_str()),
        "seed": args.seed,
        "samples": args.samples,
        "scheme": serde_json::to_value(sampling.scheme).expect("serializes"),
        "region": serde_json::to_value(&region).expect("serializes"),
        "reports": reports,
    });
    let mut body = serde_json::to_string_pretty(&doc).expect("report serializes");
    body.push('\n');
    write_output(&args.out, &body, stdout)?;
    Ok(if any_fail { EXIT_FAIL } else { EXIT_OK })
}

fn check_name(check: Check) -> Value {
    Value::from(match check {
        Check::Monotonicity => "monotonicity",
        Check::Minty => "minty",
        Check::StrongMinty => "strong-minty",
        Check::Lipschitz => "lipschitz",
        Check::Coercivity => "coercivity",
        Check::Angle => "angle",
        Check::Nonsingularity => "nonsingularity",
    })
}

fn list_cmd(stdout: &mut dyn Write) -> Result<i32, Failure> {
    for name in problems::CATALOG {
        let data = problems::reference_data(name).map_err(usage)?;
        writeln!(stdout, "{name:<22} {}", data.summary).map_err(|e| usage(e.to_string()))?;
    }
    Ok(EXIT_OK)
}

fn validate_cmd(file: &str, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let text = fs::read_to_string(file).map_err(|e| usage(format!("cannot read {file}: {e}")))?;
    let p = problems::from_json(&text).map_err(|e| usage(load_message(&e)))?;
    writeln!(
        stdout,
        "ok: dim {} lipschitz {} known solutions {}",
        p.dim(),
        p.lipschitz().map(|l| format!("{l:e}")).unwrap_or_else(|| "unknown".into()),
        p.metadata().known_solutions.len()
    )
    .map_err(|e| usage(e.to_string()))?;
    Ok(EXIT_OK)
}

/// Parse `argv` (including the program name) and run the command.
///
/// Data goes to `stdout` unless `--out` is given, in which case `stdout`
/// receives the run summary instead. Errors go to `stderr`.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                stderr.write_all(text.as_bytes()).ok();
            } else {
                stdout.write_all(text.as_bytes()).ok();
            }
            return code;
        }
    };
    let mut sink = Vec::new();
    let result = match &cli.command {
        Command::Solve(a) => {
            if a.out.is_some() {
                solve_cmd(a, &mut sink, stdout)
            } else {
                solve_cmd(a, stdout, stderr)
            }
        }
        Command::Diagnose(a) => {
            if a.out.is_some() {
                diagnose_cmd(a, &mut sink, stdout)
            } else {
                diagnose_cmd(a, stdout, stderr)
            }
        }
        Command::List => list_cmd(stdout),
        Command::Validate { file } => validate_cmd(file, stdout),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            writeln!(stderr, "error: {}", f.message).ok();
            f.code
        }
    }
}
