//! Method registry and benchmark suites: runs a named method on an
//! instance and turns the result into a [`RunRecord`].

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::Deserialize;
use thiserror::Error;

use crate::exec::{map_ordered, Execution};
use crate::hens::{
    alternating_multistage_heuristic, greedy_packing_matches, lp_round_matches, match_grid, min_utility_cascade,
    min_utility_lp, single_interval_matches, solve_matches_exact, utility_energy_lower_bound, water_filling_matches,
    HensError, HensInstance, MatchOutcome, MatchesOptions, MultistageOptions,
};
use crate::io::{generate, parse_instance, GenSpec, HensShape, Instance, IoError, PoolingShape, RunRecord, StnShape};
use crate::model::{make_certificate, ApproximationCertificate, ObjectiveSense};
use crate::pooling::{
    grid_oracle_pooling, multistart_alternating, relaxation_bound, solve_discretized, Formulation, HeuristicOutcome,
    PoolingError, PoolingNetwork,
};
use crate::scheduling::{greedy_list_schedule, lp_round_schedule, solve_discrete_time, ScheduleOutcome, StateTaskNetwork, StnError};
use crate::solver::{MilpLimits, MilpOutcome, MilpStatus};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("unknown problem `{0}`; expected one of pooling, stn, hens-matches, hens-utility, hens-multistage")]
    UnknownProblem(String),
    #[error("unknown method `{method}` for {problem}; available: {}", .problem.methods().join(", "))]
    UnknownMethod { problem: Problem, method: String },
    #[error("problem {problem} needs a {expected} instance, got {actual}")]
    KindMismatch { problem: Problem, expected: &'static str, actual: String },
    #[error("no exact method for {0}")]
    NoExactMethod(Problem),
    #[error("suite: {0}")]
    Suite(String),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Pooling(#[from] PoolingError),
    #[error(transparent)]
    Stn(#[from] StnError),
    #[error(transparent)]
    Hens(#[from] HensError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Problem {
    Pooling,
    Stn,
    HensMatches,
    HensUtility,
    HensMultistage,
}

impl Problem {
    pub const ALL: [Problem; 5] =
        [Problem::Pooling, Problem::Stn, Problem::HensMatches, Problem::HensUtility, Problem::HensMultistage];

    pub fn name(self) -> &'static str {
        match self {
            Problem::Pooling => "pooling",
            Problem::Stn => "stn",
            Problem::HensMatches => "hens-matches",
            Problem::HensUtility => "hens-utility",
            Problem::HensMultistage => "hens-multistage",
        }
    }

    /// Registered method names, in registry order.
    pub fn methods(self) -> &'static [&'static str] {
        match self {
            Problem::Pooling => &["mccormick", "piecewise", "discretize", "alternating", "grid-oracle"],
            Problem::Stn => &["lp-round", "greedy"],
            Problem::HensMatches => &["lp-round", "water-filling", "greedy-packing", "single-interval"],
            Problem::HensUtility => &["cascade"],
            Problem::HensMultistage => &["alternating"],
        }
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Problem {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Problem::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| HarnessError::UnknownProblem(s.into()))
    }
}

/// Tuning knobs shared by all methods; each method reads the ones it uses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodParams {
    /// Pieces per McCormick partition.
    pub pieces: usize,
    /// Proportion grid resolution for discretization and the grid oracle.
    pub grid: usize,
    /// Stages of the multistage model.
    pub stages: usize,
    pub max_iters: usize,
    pub time_limit: Option<Duration>,
    pub node_limit: usize,
    pub exec: Execution,
}

impl Default for MethodParams {
    fn default() -> Self {
        MethodParams {
            pieces: 2,
            grid: 4,
            stages: 2,
            max_iters: 50,
            time_limit: None,
            node_limit: MilpLimits::default().node_limit,
            exec: Execution::default(),
        }
    }
}

impl MethodParams {
    fn limits(&self) -> MilpLimits {
        MilpLimits { node_limit: self.node_limit, time_limit: self.time_limit }
    }
}

/// Outcome of one method run. `status` is `ok` for a heuristic solution,
/// `failed` for a declared heuristic failure, `bound` for a relaxation
/// value, and the solver status for exact runs.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodResult {
    pub status: String,
    pub objective: Option<f64>,
    pub bound: Option<f64>,
    pub certificate: Option<ApproximationCertificate>,
    pub detail: Option<String>,
}

impl MethodResult {
    pub fn ratio(&self) -> Option<f64> {
        self.certificate.and_then(|c| c.ratio)
    }

    pub fn is_failure(&self) -> bool {
        matches!(self.status.as_str(), "failed" | "infeasible" | "unbounded" | "node-limit")
    }

    fn heuristic(objective: Option<f64>, bound: Option<f64>, failure: Option<String>) -> Self {
        let certificate = match (objective, bound) {
            (Some(o), Some(b)) => Some(make_certificate(ObjectiveSense::Minimize, o, b)),
            _ => None,
        };
        MethodResult {
            status: if objective.is_some() { "ok" } else { "failed" }.into(),
            objective,
            bound,
            certificate,
            detail: failure,
        }
    }

    pub fn to_record(&self, instance: &str, problem: Problem, method: &str, seed: u64, time_ms: Option<f64>) -> RunRecord {
        RunRecord {
            instance: instance.into(),
            problem: problem.name().into(),
            method: method.into(),
            status: self.status.clone(),
            objective: self.objective,
            bound: self.bound,
            ratio: self.ratio(),
            time_ms,
            seed,
        }
    }
}

fn pooling_result(out: HeuristicOutcome) -> MethodResult {
    let objective = out.solution.as_ref().map(|s| s.objective);
    let failure = objective.is_none().then(|| "no solution passed both formulation checks".to_string());
    MethodResult::heuristic(objective, out.bound, failure)
}

fn schedule_result(out: ScheduleOutcome) -> MethodResult {
    MethodResult::heuristic(out.makespan(), out.bound, out.failure)
}

fn match_result(out: MatchOutcome) -> MethodResult {
    MethodResult::heuristic(out.match_count().map(|n| n as f64), Some(out.lower_bound as f64), out.failure)
}

fn milp_result(out: &MilpOutcome) -> MethodResult {
    let status = match out.status {
        MilpStatus::Optimal => "optimal",
        MilpStatus::FeasibleLimit => "feasible-limit",
        MilpStatus::Infeasible => "infeasible",
        MilpStatus::NodeLimit => "node-limit",
        MilpStatus::Unbounded => "unbounded",
    };
    let objective = out.primal.as_ref().map(|_| out.objective);
    let bound = out.best_bound.is_finite().then_some(out.best_bound);
    let certificate = match (objective, bound) {
        (Some(o), Some(b)) => Some(make_certificate(ObjectiveSense::Minimize, o, b)),
        _ => None,
    };
    MethodResult { status: status.into(), objective, bound, certificate, detail: None }
}

fn bound_only(bound: Option<f64>) -> MethodResult {
    MethodResult {
        status: if bound.is_some() { "bound" } else { "infeasible" }.into(),
        objective: None,
        bound,
        certificate: None,
        detail: None,
    }
}

fn pooling_net(problem: Problem, inst: &Instance) -> Result<&PoolingNetwork, HarnessError> {
    match inst {
        Instance::Pooling(n) => Ok(n),
        other => Err(mismatch(problem, "pooling", other)),
    }
}

fn stn(problem: Problem, inst: &Instance) -> Result<&StateTaskNetwork, HarnessError> {
    match inst {
        Instance::Stn(s) => Ok(s),
        other => Err(mismatch(problem, "stn", other)),
    }
}

fn hens(problem: Problem, inst: &Instance) -> Result<&HensInstance, HarnessError> {
    match inst {
        Instance::Hens(h) => Ok(h),
        other => Err(mismatch(problem, "hens", other)),
    }
}

fn mismatch(problem: Problem, expected: &'static str, got: &Instance) -> HarnessError {
    HarnessError::KindMismatch { problem, expected, actual: got.kind().to_string() }
}

/// Runs a registered heuristic or relaxation.
pub fn run_method(problem: Problem, method: &str, inst: &Instance, params: &MethodParams) -> Result<MethodResult, HarnessError> {
    if !problem.methods().contains(&method) {
        return Err(HarnessError::UnknownMethod { problem, method: method.into() });
    }
    Ok(match (problem, method) {
        (Problem::Pooling, "mccormick") => bound_only(relaxation_bound(pooling_net(problem, inst)?, Formulation::Pq, 1)?),
        (Problem::Pooling, "piecewise") => {
            bound_only(relaxation_bound(pooling_net(problem, inst)?, Formulation::Pq, params.pieces)?)
        }
        (Problem::Pooling, "discretize") => {
            pooling_result(solve_discretized(pooling_net(problem, inst)?, params.grid, &params.limits())?)
        }
        (Problem::Pooling, "alternating") => {
            pooling_result(multistart_alternating(pooling_net(problem, inst)?, params.max_iters, params.exec)?)
        }
        (Problem::Pooling, "grid-oracle") => {
            pooling_result(grid_oracle_pooling(pooling_net(problem, inst)?, params.grid, params.exec)?)
        }
        (Problem::Stn, "lp-round") => schedule_result(lp_round_schedule(stn(problem, inst)?)?),
        (Problem::Stn, "greedy") => schedule_result(greedy_list_schedule(stn(problem, inst)?)?),
        (Problem::HensMatches, m) => {
            let grid = match_grid(hens(problem, inst)?)?;
            match_result(match m {
                "lp-round" => lp_round_matches(&grid)?,
                "water-filling" => water_filling_matches(&grid)?,
                "greedy-packing" => greedy_packing_matches(&grid)?,
                _ => single_interval_matches(&grid)?,
            })
        }
        (Problem::HensUtility, _) => {
            let h = hens(problem, inst)?;
            let t = min_utility_cascade(h)?;
            MethodResult::heuristic(Some(t.cost), Some(utility_energy_lower_bound(h)), None)
        }
        (Problem::HensMultistage, _) => {
            let out = alternating_multistage_heuristic(
                hens(problem, inst)?,
                MultistageOptions::new(params.stages),
                params.max_iters,
            )?;
            MethodResult::heuristic(out.cost, Some(out.bound), out.failure)
        }
        _ => unreachable!("registry and dispatch disagree"),
    })
}

/// Runs the exact route for a problem: the grid oracle for pooling (exact
/// over the proportion grid), the discrete-time MILP for scheduling, and
/// the matches MILP or transshipment LP for heat exchanger networks.
pub fn run_exact(problem: Problem, inst: &Instance, params: &MethodParams) -> Result<MethodResult, HarnessError> {
    Ok(match problem {
        Problem::Pooling => {
            let mut r = pooling_result(grid_oracle_pooling(pooling_net(problem, inst)?, params.grid, params.exec)?);
            // optimal over the proportion grid only
            if r.objective.is_some() {
                r.status = "grid-optimal".into();
            }
            r
        }
        Problem::Stn => milp_result(&solve_discrete_time(stn(problem, inst)?, &params.limits())?.0),
        Problem::HensMatches => {
            let grid = match_grid(hens(problem, inst)?)?;
            milp_result(&solve_matches_exact(&grid, MatchesOptions::default(), &params.limits())?.0)
        }
        Problem::HensUtility => {
            let h = hens(problem, inst)?;
            let t = min_utility_lp(h)?;
            let mut r = MethodResult::heuristic(Some(t.cost), Some(t.cost), None);
            r.status = "optimal".into();
            r
        }
        Problem::HensMultistage => return Err(HarnessError::NoExactMethod(problem)),
    })
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteInstance {
    pub name: String,
    #[serde(default)]
    pub file: Option<String>,
    #[serde(default)]
    pub generate: Option<GenerateSpec>,
}

/// Generator request inside a suite; `seed` defaults to the suite seed.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GenerateSpec {
    Pooling { inputs: usize, pools: usize, outputs: usize, attributes: usize, seed: Option<u64> },
    Stn { tasks: usize, units: usize, horizon: usize, seed: Option<u64> },
    Hens { hot: usize, cold: usize, intervals: usize, balanced: bool, seed: Option<u64> },
    SingleInterval { hot: usize, cold: usize, seed: Option<u64> },
}

impl GenerateSpec {
    fn resolve(&self, suite_seed: u64) -> (GenSpec, u64) {
        match *self {
            GenerateSpec::Pooling { inputs, pools, outputs, attributes, seed } => (
                GenSpec::Pooling(PoolingShape { inputs, pools, outputs, attributes }),
                seed.unwrap_or(suite_seed),
            ),
            GenerateSpec::Stn { tasks, units, horizon, seed } => {
                (GenSpec::Stn(StnShape { tasks, units, horizon }), seed.unwrap_or(suite_seed))
            }
            GenerateSpec::Hens { hot, cold, intervals, balanced, seed } => {
                (GenSpec::Hens(HensShape { hot, cold, intervals, balanced }), seed.unwrap_or(suite_seed))
            }
            GenerateSpec::SingleInterval { hot, cold, seed } => {
                (GenSpec::SingleInterval { hot, cold }, seed.unwrap_or(suite_seed))
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteRun {
    pub problem: String,
    pub instances: Vec<String>,
    pub methods: Vec<String>,
    #[serde(default)]
    pub exact: bool,
    pub pieces: Option<usize>,
    pub grid: Option<usize>,
    pub stages: Option<usize>,
    pub max_iters: Option<usize>,
}

/// A benchmark matrix: every run crosses its instances with its methods
/// (plus the exact route when `exact` is set).
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Suite {
    #[serde(default)]
    pub seed: u64,
    pub instances: Vec<SuiteInstance>,
    pub runs: Vec<SuiteRun>,
}

pub fn parse_suite(text: &str) -> Result<Suite, HarnessError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| HarnessError::Suite(format!("at `{}`: {}", e.path(), e.inner())))
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SuiteOptions {
    /// Overrides the suite seed (used for generated instances and the
    /// seed column).
    pub seed: Option<u64>,
    /// Fill the `time_ms` column; timings make reports differ run to run.
    pub timing: bool,
    pub exec: Execution,
}

struct Cell<'a> {
    instance: &'a str,
    problem: Problem,
    method: Option<&'a str>,
    params: MethodParams,
}

/// Runs every cell of the suite; rows come out in declaration order no
/// matter how cells are scheduled. File paths are relative to `base`.
pub fn run_suite(suite: &Suite, base: &Path, options: &SuiteOptions) -> Result<Vec<RunRecord>, HarnessError> {
    let seed = options.seed.unwrap_or(suite.seed);
    let mut instances = std::collections::BTreeMap::new();
    for si in &suite.instances {
        let inst = match (&si.file, &si.generate) {
            (Some(file), None) => {
                let path = base.join(file);
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| HarnessError::Suite(format!("reading {}: {e}", path.display())))?;
                parse_instance(&text)?.instance
            }
            (None, Some(g)) => {
                let (spec, s) = g.resolve(seed);
                generate(&spec, s)?.instance
            }
            _ => return Err(HarnessError::Suite(format!("instance `{}` needs exactly one of file or generate", si.name))),
        };
        if instances.insert(si.name.as_str(), inst).is_some() {
            return Err(HarnessError::Suite(format!("instance `{}` declared twice", si.name)));
        }
    }
    let mut cells = Vec::new();
    for run in &suite.runs {
        let problem: Problem = run.problem.parse()?;
        let defaults = MethodParams::default();
        let params = MethodParams {
            pieces: run.pieces.unwrap_or(defaults.pieces),
            grid: run.grid.unwrap_or(defaults.grid),
            stages: run.stages.unwrap_or(defaults.stages),
            max_iters: run.max_iters.unwrap_or(defaults.max_iters),
            exec: Execution::Sequential,
            ..defaults
        };
        for name in &run.instances {
            if !instances.contains_key(name.as_str()) {
                return Err(HarnessError::Suite(format!("run refers to unknown instance `{name}`")));
            }
            for m in &run.methods {
                if !problem.methods().contains(&m.as_str()) {
                    return Err(HarnessError::UnknownMethod { problem, method: m.clone() });
                }
                cells.push(Cell { instance: name, problem, method: Some(m), params });
            }
            if run.exact {
                cells.push(Cell { instance: name, problem, method: None, params });
            }
        }
    }
    let results = map_ordered(options.exec, &cells, |c| {
        let inst = &instances[c.instance];
        let start = Instant::now();
        let result = match c.method {
            Some(m) => run_method(c.problem, m, inst, &c.params),
            None => run_exact(c.problem, inst, &c.params),
        };
        (result, start.elapsed())
    });
    cells
        .iter()
        .zip(results)
        .map(|(c, (result, elapsed))| {
            let method = c.method.unwrap_or("exact");
            let time = options.timing.then_some(elapsed.as_secs_f64() * 1e3);
            match result {
                Ok(r) => Ok(r.to_record(c.instance, c.problem, method, seed, time)),
                Err(e) => Ok(RunRecord {
                    instance: c.instance.into(),
                    problem: c.problem.name().into(),
                    method: method.into(),
                    status: format!("error: {e}"),
                    objective: None,
                    bound: None,
                    ratio: None,
                    time_ms: time,
                    seed,
                }),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hens::Stream;
    use crate::io::write_report;

    fn six_four() -> Instance {
        Instance::Hens(HensInstance::new(
            vec![Stream::new("h1", 101.0, 100.0, 6.0), Stream::new("h2", 101.0, 100.0, 4.0)],
            vec![Stream::new("c1", 100.0, 101.0, 5.0), Stream::new("c2", 100.0, 101.0, 5.0)],
        ))
    }

    #[test]
    fn registry_round_trips_names() {
        for p in Problem::ALL {
            assert_eq!(p.name().parse::<Problem>().unwrap(), p);
        }
        assert!("tsp".parse::<Problem>().is_err());
    }

    #[test]
    fn matches_methods_and_exact() {
        let inst = six_four();
        let params = MethodParams::default();
        let exact = run_exact(Problem::HensMatches, &inst, &params).unwrap();
        assert_eq!(exact.objective, Some(3.0));
        for m in Problem::HensMatches.methods() {
            let r = run_method(Problem::HensMatches, m, &inst, &params).unwrap();
            assert!(r.objective.unwrap() >= 3.0);
            assert!(r.ratio().unwrap() >= 1.0);
        }
    }

    #[test]
    fn unknown_method_and_kind_mismatch() {
        let inst = six_four();
        let params = MethodParams::default();
        assert!(matches!(run_method(Problem::Stn, "cascade", &inst, &params), Err(HarnessError::UnknownMethod { .. })));
        assert!(matches!(run_method(Problem::Stn, "greedy", &inst, &params), Err(HarnessError::KindMismatch { .. })));
        assert!(matches!(run_exact(Problem::HensMultistage, &inst, &params), Err(HarnessError::NoExactMethod(_))));
    }

    #[test]
    fn generated_suite_is_deterministic() {
        let text = r#"{
            "seed": 3,
            "instances": [
                {"name": "pool", "generate": {"kind": "pooling", "inputs": 2, "pools": 1, "outputs": 2, "attributes": 1}},
                {"name": "match", "generate": {"kind": "hens", "hot": 2, "cold": 2, "intervals": 2, "balanced": true}}
            ],
            "runs": [
                {"problem": "pooling", "instances": ["pool"], "methods": ["mccormick", "alternating"]},
                {"problem": "hens-matches", "instances": ["match"], "methods": ["water-filling"], "exact": true}
            ]
        }"#;
        let suite = parse_suite(text).unwrap();
        let run = |exec| write_report(&run_suite(&suite, Path::new("."), &SuiteOptions { exec, ..Default::default() }).unwrap());
        let a = run(Execution::Parallel);
        assert_eq!(a, run(Execution::Sequential));
        assert_eq!(a.lines().count(), 5);
    }
}
