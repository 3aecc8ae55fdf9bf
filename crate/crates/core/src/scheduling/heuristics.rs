use std::collections::BTreeMap;

use crate::model::{make_certificate, ApproximationCertificate, Assignment, LinearModel, ObjectiveSense};
use crate::solver::{solve_lp, LpStatus};

use super::discrete::{build_discrete_time_model, schedule_from_discrete, var_x};
use super::{inventory_profile, makespan, validate_schedule, Schedule, ScheduleEntry, StateTaskNetwork, StnError, Task};

const TOL: f64 = 1e-6;

/// Result of a scheduling heuristic. `schedule` is `None` on a declared
/// failure, with the reason in `failure`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleOutcome {
    pub schedule: Option<Schedule>,
    /// Root relaxation makespan of the discrete-time model.
    pub bound: Option<f64>,
    pub certificate: Option<ApproximationCertificate>,
    pub failure: Option<String>,
}

impl ScheduleOutcome {
    fn success(schedule: Schedule, bound: Option<f64>) -> Self {
        let certificate = bound.map(|b| make_certificate(ObjectiveSense::Minimize, makespan(&schedule), b));
        ScheduleOutcome { schedule: Some(schedule), bound, certificate, failure: None }
    }

    fn failure(reason: impl Into<String>, bound: Option<f64>) -> Self {
        ScheduleOutcome { schedule: None, bound, certificate: None, failure: Some(reason.into()) }
    }

    pub fn makespan(&self) -> Option<f64> {
        self.schedule.as_ref().map(makespan)
    }
}

fn relaxation(model: &LinearModel) -> Option<(f64, Assignment)> {
    let out = solve_lp(model);
    match (out.status, out.objective, out.primal) {
        (LpStatus::Optimal, obj, Some(a)) => Some((obj, a)),
        _ => None,
    }
}

fn root_bound(stn: &StateTaskNetwork) -> Result<Option<f64>, StnError> {
    let model = build_discrete_time_model(stn)?.relax_integrality();
    Ok(relaxation(&model).map(|r| r.0))
}

fn inventories_nonnegative(stn: &StateTaskNetwork, schedule: &Schedule) -> bool {
    inventory_profile(stn, schedule)
        .iter()
        .all(|(s, profile)| stn.is_raw(s) || profile.iter().all(|(_, v)| *v >= -TOL))
}

fn unit_free(schedule: &Schedule, unit: &str, start: f64, end: f64) -> bool {
    schedule
        .entries
        .iter()
        .filter(|e| e.unit == unit)
        .all(|e| end <= e.start + TOL || start >= e.end() - TOL)
}

/// Earliest integer start at or after `from` on one of `units` such that the
/// unit is idle and no produced state's inventory goes negative. Earliest
/// completion wins; ties go to the first listed unit.
fn place_earliest(
    stn: &StateTaskNetwork,
    placed: &Schedule,
    task: &Task,
    units: &[&str],
    batch: f64,
    from: usize,
) -> Option<ScheduleEntry> {
    let mut best: Option<ScheduleEntry> = None;
    for unit in units {
        let spec = task.units.iter().find(|u| u.unit == *unit)?;
        let p = spec.p as usize;
        if p > stn.horizon {
            continue;
        }
        for start in from..=stn.horizon - p {
            let entry = ScheduleEntry {
                task: task.id.clone(),
                unit: unit.to_string(),
                start: start as f64,
                duration: spec.p as f64,
                batch,
            };
            if best.as_ref().is_some_and(|b| b.end() <= entry.end()) {
                break;
            }
            if !unit_free(placed, unit, entry.start, entry.end()) {
                continue;
            }
            let mut trial = placed.clone();
            trial.entries.push(entry.clone());
            if inventories_nonnegative(stn, &trial) {
                best = Some(entry);
                break;
            }
        }
    }
    best
}

fn fractional_choice(stn: &StateTaskNetwork, a: &Assignment) -> Option<String> {
    let mut best: Option<(f64, usize, &str, &str)> = None;
    for t in 1..=stn.horizon {
        for task in &stn.tasks {
            for u in &task.units {
                let v = a.get(&var_x(&task.id, &u.unit, t)).unwrap_or(0.0);
                if v <= TOL || v >= 1.0 - TOL {
                    continue;
                }
                let key = (v, t, task.id.as_str(), u.unit.as_str());
                let better = match best {
                    None => true,
                    Some(b) => key.0 > b.0 + 1e-12 || ((key.0 - b.0).abs() <= 1e-12 && (key.1, key.2, key.3) < (b.1, b.2, b.3)),
                };
                if better {
                    best = Some(key);
                }
            }
        }
    }
    best.map(|(_, t, task, unit)| var_x(task, unit, t))
}

/// Rounds the discrete-time relaxation: repeatedly fixes the start
/// indicator with the largest fractional value to 1 (to 0 when that makes
/// the relaxation infeasible) until the start pattern is integral. Empty
/// batches are dropped and the rest re-placed in start order at their
/// earliest feasible start, which also resolves conflicts.
pub fn lp_round_schedule(stn: &StateTaskNetwork) -> Result<ScheduleOutcome, StnError> {
    let mut model = build_discrete_time_model(stn)?.relax_integrality();
    let Some((bound, mut point)) = relaxation(&model) else {
        return Ok(ScheduleOutcome::failure("relaxation has no optimal solution within the horizon", None));
    };
    let bound = Some(bound);
    while let Some(var) = fractional_choice(stn, &point) {
        let mut fixed = None;
        for value in [1.0, 0.0] {
            let mut trial = model.clone();
            trial.set_bounds(&var, value, value)?;
            if let Some((_, a)) = relaxation(&trial) {
                fixed = Some((trial, a));
                break;
            }
        }
        let Some((next, a)) = fixed else {
            return Ok(ScheduleOutcome::failure(format!("fixing `{var}` either way leaves no feasible relaxation"), bound));
        };
        model = next;
        point = a;
    }
    let mut rounded = schedule_from_discrete(stn, &point);
    rounded.entries.retain(|e| e.batch > TOL);
    rounded.entries.sort_by(|a, b| a.start.total_cmp(&b.start).then_with(|| a.task.cmp(&b.task)));
    let mut placed = Schedule::default();
    for e in rounded.entries {
        let task = stn.task(&e.task).expect("task from model");
        match place_earliest(stn, &placed, task, &[e.unit.as_str()], e.batch, 0) {
            Some(entry) => placed.entries.push(entry),
            None => return Ok(ScheduleOutcome::failure(format!("repair pushed `{}` past the horizon", e.task), bound)),
        }
    }
    finish(stn, placed, bound)
}

fn finish(stn: &StateTaskNetwork, schedule: Schedule, bound: Option<f64>) -> Result<ScheduleOutcome, StnError> {
    let report = validate_schedule(stn, &schedule, TOL);
    if !report.is_feasible() {
        return Ok(ScheduleOutcome::failure(report.violations.join("; "), bound));
    }
    Ok(ScheduleOutcome::success(schedule, bound))
}

/// Batch sizes for producing `amount` on the unit with the largest batch
/// window: full batches, with the last one raised to the lower limit.
fn plan_batches(task: &Task, amount: f64) -> Vec<f64> {
    let Some(spec) = task.units.iter().fold(None::<&super::TaskUnit>, |best, u| match best {
        Some(b) if b.b.1 >= u.b.1 => Some(b),
        _ => Some(u),
    }) else {
        return Vec::new();
    };
    let mut sizes = Vec::new();
    let mut left = amount;
    while left > TOL && spec.b.1 > TOL {
        let size = left.min(spec.b.1).max(spec.b.0);
        sizes.push(size);
        left -= size;
    }
    sizes
}

/// List scheduling. Required amounts are propagated backwards from the
/// demands through the recipe; tasks are then placed in topological order,
/// each batch at its earliest feasible start at the largest batch its unit
/// allows. Fails on recycle loops and when a batch cannot finish within
/// the horizon.
pub fn greedy_list_schedule(stn: &StateTaskNetwork) -> Result<ScheduleOutcome, StnError> {
    let bound = root_bound(stn)?;
    let Some(order) = stn.topological_tasks() else {
        return Ok(ScheduleOutcome::failure("recipe contains a recycle loop", bound));
    };
    let mut need: BTreeMap<&str, f64> = stn.states.iter().map(|s| (s.id.as_str(), s.demand)).collect();
    let mut plans: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for task in order.iter().rev() {
        let amount = task
            .produce
            .iter()
            .map(|(s, f)| need.get(s.as_str()).copied().unwrap_or(0.0).max(0.0) / f)
            .fold(0.0, f64::max);
        let sizes = plan_batches(task, amount);
        let total: f64 = sizes.iter().sum();
        for (s, f) in &task.produce {
            if let Some(n) = need.get_mut(s.as_str()) {
                *n -= f * total;
            }
        }
        for (s, f) in &task.consume {
            if let Some(n) = need.get_mut(s.as_str()) {
                *n += f * total;
            }
        }
        plans.insert(&task.id, sizes);
    }
    let mut placed = Schedule::default();
    for task in order {
        for &batch in &plans[task.id.as_str()] {
            let mut units: Vec<&str> = task
                .units
                .iter()
                .filter(|u| batch >= u.b.0 - TOL && batch <= u.b.1 + TOL)
                .map(|u| u.unit.as_str())
                .collect();
            units.sort_unstable();
            match place_earliest(stn, &placed, task, &units, batch, 0) {
                Some(entry) => placed.entries.push(entry),
                None => return Ok(ScheduleOutcome::failure(format!("no start for `{}` finishes within the horizon", task.id), bound)),
            }
        }
    }
    finish(stn, placed, bound)
}
