//! Command-line front end. [`run`] takes the full argument vector and
//! returns the exit code with captured output, so tests can drive it
//! without spawning a process.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use pse_core::exec::Execution;
use pse_core::export_lp_text;
use pse_core::harness::{parse_suite, run_exact, run_method, run_suite, HarnessError, MethodParams, Problem, SuiteOptions};
use pse_core::hens::{build_matches_milp, build_multistage_qp, match_grid, MatchesOptions, MultistageOptions};
use pse_core::io::{
    generate, parse_instance, write_instance, write_report, GenSpec, HensShape, Instance, InstanceEnvelope, PoolingShape,
    StnShape,
};
use pse_core::pooling::{classify_pooling_instance, piecewise_mccormick_relax, Formulation, DEFAULT_KAPPA};
use pse_core::scheduling::{build_continuous_time_model, build_discrete_time_model};

pub const SEED_ENV: &str = "PSE_SEED";

/// Exit status: success.
pub const EXIT_OK: i32 = 0;
/// A heuristic declared failure or the solver found no solution.
pub const EXIT_FAILURE: i32 = 1;
/// Bad arguments, unreadable files or invalid instances.
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CliOutput {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

#[derive(Debug, Parser)]
#[command(name = "pse", version, about = "Pooling, batch scheduling and heat exchanger network optimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a named heuristic or relaxation on an instance
    Solve(SolveArgs),
    /// Run the exact route for a problem
    Exact(SolveArgs),
    /// Print the complexity class of a pooling instance
    Classify {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = DEFAULT_KAPPA)]
        kappa: usize,
    },
    /// Write a formulation in LP text format
    Export {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, value_enum)]
        formulation: ExportKind,
        /// Pooling only: write the piecewise McCormick relaxation with N pieces
        #[arg(long)]
        pieces: Option<usize>,
        /// Multistage only
        #[arg(long, default_value_t = 2)]
        stages: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a random instance
    Gen(GenArgs),
    /// Run a benchmark suite and write a CSV report
    Bench {
        #[arg(long)]
        suite: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Fill the time_ms column
        #[arg(long)]
        timing: bool,
        #[arg(long)]
        sequential: bool,
    },
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[arg(long)]
    problem: String,
    #[arg(long)]
    instance: PathBuf,
    /// Method name; ignored by `exact`
    #[arg(long)]
    method: Option<String>,
    #[arg(long, default_value_t = 2)]
    pieces: usize,
    #[arg(long, default_value_t = 4)]
    grid: usize,
    #[arg(long, default_value_t = 2)]
    stages: usize,
    #[arg(long, default_value_t = 50)]
    max_iters: usize,
    /// Seconds
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    timing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ExportKind {
    P,
    Pq,
    Dt,
    Ct,
    Matches,
    Multistage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GenProblem {
    Pooling,
    Stn,
    Hens,
    SingleInterval,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    problem: GenProblem,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 3)]
    inputs: usize,
    #[arg(long, default_value_t = 1)]
    pools: usize,
    #[arg(long, default_value_t = 2)]
    outputs: usize,
    #[arg(long, default_value_t = 1)]
    attributes: usize,
    #[arg(long, default_value_t = 2)]
    tasks: usize,
    #[arg(long, default_value_t = 1)]
    units: usize,
    #[arg(long, default_value_t = 8)]
    horizon: usize,
    #[arg(long, default_value_t = 3)]
    hot: usize,
    #[arg(long, default_value_t = 3)]
    cold: usize,
    #[arg(long, default_value_t = 3)]
    intervals: usize,
    /// Allow instances that need utilities
    #[arg(long)]
    unbalanced: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: EXIT_USAGE, message: message.into() }
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        Failure::usage(e.to_string())
    }
}

impl From<pse_core::io::IoError> for Failure {
    fn from(e: pse_core::io::IoError) -> Self {
        Failure::usage(e.to_string())
    }
}

type CmdResult = Result<(i32, String), Failure>;

pub fn run<I, T>(args: I) -> CliOutput
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            return if code == EXIT_OK {
                CliOutput { code, stdout: text, stderr: String::new() }
            } else {
                CliOutput { code, stdout: String::new(), stderr: text }
            };
        }
    };
    match dispatch(cli.command) {
        Ok((code, stdout)) => CliOutput { code, stdout, stderr: String::new() },
        Err(f) => CliOutput { code: f.code, stdout: String::new(), stderr: format!("error: {}\n", f.message) },
    }
}

fn dispatch(cmd: Command) -> CmdResult {
    match cmd {
        Command::Solve(a) => solve(a, false),
        Command::Exact(a) => solve(a, true),
        Command::Classify { instance, kappa } => classify(&instance, kappa),
        Command::Export { instance, formulation, pieces, stages, out } => export(&instance, formulation, pieces, stages, &out),
        Command::Gen(a) => gen(a),
        Command::Bench { suite, out, seed, timing, sequential } => bench(&suite, out.as_deref(), seed, timing, sequential),
    }
}

fn default_seed(flag: Option<u64>) -> Result<u64, Failure> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| Failure::usage(format!("{SEED_ENV} must be an unsigned integer, got `{v}`"))),
        Err(_) => Ok(0),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))
}

fn load(path: &Path) -> Result<Instance, Failure> {
    let text = read(path)?;
    parse_instance(&text).map(|e| e.instance).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn instance_name(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn solve(a: SolveArgs, exact: bool) -> CmdResult {
    let problem: Problem = a.problem.parse()?;
    let seed = default_seed(a.seed)?;
    let time_limit = match a.time_limit {
        Some(s) if !(s.is_finite() && s > 0.0) => return Err(Failure::usage("--time-limit must be a positive number of seconds")),
        Some(s) => Some(Duration::from_secs_f64(s)),
        None => None,
    };
    let inst = load(&a.instance)?;
    let params = MethodParams {
        pieces: a.pieces,
        grid: a.grid,
        stages: a.stages,
        max_iters: a.max_iters,
        time_limit,
        ..MethodParams::default()
    };
    let start = Instant::now();
    let (method, result) = if exact {
        ("exact", run_exact(problem, &inst, &params)?)
    } else {
        let m = a.method.as_deref().ok_or_else(|| {
            Failure::usage(format!("--method is required; available for {problem}: {}", problem.methods().join(", ")))
        })?;
        (m, run_method(problem, m, &inst, &params)?)
    };
    let time = a.timing.then(|| start.elapsed().as_secs_f64() * 1e3);
    let record = result.to_record(&instance_name(&a.instance), problem, method, seed, time);
    let report = write_report(std::slice::from_ref(&record));
    if let Some(out) = &a.out {
        write(out, &report)?;
    }
    let mut stdout = report;
    if let Some(d) = &result.detail {
        stdout.push_str(&format!("# {d}\n"));
    }
    Ok((if result.is_failure() { EXIT_FAILURE } else { EXIT_OK }, stdout))
}

fn classify(path: &Path, kappa: usize) -> CmdResult {
    match load(path)? {
        Instance::Pooling(net) => {
            let c = classify_pooling_instance(&net, kappa);
            Ok((EXIT_OK, format!("{}\t{}\n", c.class, c.rule)))
        }
        other => Err(Failure::usage(format!("classify needs a pooling instance, got {}", other.kind()))),
    }
}

fn export(path: &Path, kind: ExportKind, pieces: Option<usize>, stages: usize, out: &Path) -> CmdResult {
    let inst = load(path)?;
    let wrong = |expected: &str, got: &Instance| {
        Failure::usage(format!("formulation {kind:?} needs a {expected} instance, got {}", got.kind()).to_lowercase())
    };
    let model_err = |e: &dyn std::fmt::Display| Failure::usage(e.to_string());
    let text = match (kind, &inst) {
        (ExportKind::P | ExportKind::Pq, Instance::Pooling(net)) => {
            let f = if kind == ExportKind::P { Formulation::P } else { Formulation::Pq };
            let model = f.build(net).map_err(|e| model_err(&e))?;
            match pieces {
                Some(n) => export_lp_text(&piecewise_mccormick_relax(&model, n).map_err(|e| model_err(&e))?),
                None => export_lp_text(&model),
            }
        }
        (ExportKind::Dt, Instance::Stn(stn)) => export_lp_text(&build_discrete_time_model(stn).map_err(|e| model_err(&e))?),
        (ExportKind::Ct, Instance::Stn(stn)) => export_lp_text(&build_continuous_time_model(stn).map_err(|e| model_err(&e))?),
        (ExportKind::Matches, Instance::Hens(h)) => {
            let grid = match_grid(h).map_err(|e| model_err(&e))?;
            export_lp_text(&build_matches_milp(&grid, MatchesOptions::default()).map_err(|e| model_err(&e))?)
        }
        (ExportKind::Multistage, Instance::Hens(h)) => {
            export_lp_text(&build_multistage_qp(h, MultistageOptions::new(stages)).map_err(|e| model_err(&e))?)
        }
        (ExportKind::P | ExportKind::Pq, other) => return Err(wrong("pooling", other)),
        (ExportKind::Dt | ExportKind::Ct, other) => return Err(wrong("stn", other)),
        (_, other) => return Err(wrong("hens", other)),
    };
    write(out, &text)?;
    Ok((EXIT_OK, String::new()))
}

fn gen(a: GenArgs) -> CmdResult {
    let seed = default_seed(a.seed)?;
    let spec = match a.problem {
        GenProblem::Pooling => GenSpec::Pooling(PoolingShape {
            inputs: a.inputs,
            pools: a.pools,
            outputs: a.outputs,
            attributes: a.attributes,
        }),
        GenProblem::Stn => GenSpec::Stn(StnShape { tasks: a.tasks, units: a.units, horizon: a.horizon }),
        GenProblem::Hens => {
            GenSpec::Hens(HensShape { hot: a.hot, cold: a.cold, intervals: a.intervals, balanced: !a.unbalanced })
        }
        GenProblem::SingleInterval => GenSpec::SingleInterval { hot: a.hot, cold: a.cold },
    };
    let env: InstanceEnvelope = generate(&spec, seed)?;
    let text = write_instance(&env);
    match &a.out {
        Some(out) => {
            write(out, &text)?;
            Ok((EXIT_OK, String::new()))
        }
        None => Ok((EXIT_OK, text)),
    }
}

fn bench(path: &Path, out: Option<&Path>, seed: Option<u64>, timing: bool, sequential: bool) -> CmdResult {
    let suite = parse_suite(&read(path)?)?;
    let seed = match seed {
        Some(s) => Some(s),
        None if std::env::var_os(SEED_ENV).is_some() => Some(default_seed(None)?),
        None => None,
    };
    let exec = if sequential { Execution::Sequential } else { Execution::Parallel };
    let base = path.parent().unwrap_or(Path::new("."));
    let records = run_suite(&suite, base, &SuiteOptions { seed, timing, exec })?;
    let report = write_report(&records);
    match out {
        Some(o) => {
            write(o, &report)?;
            Ok((EXIT_OK, format!("{} rows written to {}\n", records.len(), o.display())))
        }
        None => Ok((EXIT_OK, report)),
    }
}
