//! Batch process scheduling on state-task networks: tasks consume and
//! produce material states on processing units; the goal is the shortest
//! makespan meeting final demands.

mod continuous;
mod discrete;
mod heuristics;
mod oracle;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::ModelError;

pub use continuous::{build_continuous_time_model, default_big_h};
pub use discrete::{build_discrete_time_model, schedule_from_discrete, solve_discrete_time};
pub use heuristics::{greedy_list_schedule, lp_round_schedule, ScheduleOutcome};
pub use oracle::enumerate_schedules_oracle;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StnError {
    #[error("invalid state-task network: {}", .0.join("; "))]
    Invalid(Vec<String>),
    #[error("task `{0}` runs on several units; duplicate it per unit for the continuous-time model")]
    MultiUnitTask(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("exhaustive enumeration limited to {limit} start decisions, instance has {actual}")]
    TooLarge { limit: usize, actual: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub id: String,
    #[serde(default)]
    pub demand: f64,
}

/// A unit eligible for a task, with its processing time (in slots) and
/// batch window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskUnit {
    pub unit: String,
    pub p: u32,
    #[serde(with = "crate::io::inf::pair")]
    pub b: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub id: String,
    pub units: Vec<TaskUnit>,
    #[serde(default)]
    pub consume: BTreeMap<String, f64>,
    #[serde(default)]
    pub produce: BTreeMap<String, f64>,
    /// Fixed duration term of the continuous-time model.
    #[serde(default)]
    pub alpha: f64,
    /// Per-unit-batch duration term of the continuous-time model.
    #[serde(default)]
    pub beta: f64,
}

/// States, tasks (with their eligible units) and the horizon: the number of
/// unit-length slots for the discrete-time model, or of event points for
/// the continuous-time model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateTaskNetwork {
    pub states: Vec<State>,
    pub tasks: Vec<Task>,
    pub horizon: usize,
    /// Time horizon of the continuous-time model; derived when absent.
    #[serde(rename = "bigH", default, skip_serializing_if = "Option::is_none")]
    pub big_h: Option<f64>,
}

impl StateTaskNetwork {
    /// Units mentioned by any task, sorted.
    pub fn units(&self) -> Vec<String> {
        let set: BTreeSet<&String> = self.tasks.iter().flat_map(|t| t.units.iter().map(|u| &u.unit)).collect();
        set.into_iter().cloned().collect()
    }

    pub fn task(&self, id: &str) -> Option<&Task> {
        self.tasks.iter().find(|t| t.id == id)
    }

    pub fn state(&self, id: &str) -> Option<&State> {
        self.states.iter().find(|s| s.id == id)
    }

    /// States no task produces; they are available in unlimited quantity.
    pub fn is_raw(&self, state: &str) -> bool {
        !self.tasks.iter().any(|t| t.produce.contains_key(state))
    }

    pub fn unit_spec(&self, task: &str, unit: &str) -> Option<&TaskUnit> {
        self.task(task)?.units.iter().find(|u| u.unit == unit)
    }

    /// Tasks in an order where every producer of a state precedes its
    /// consumers; `None` if the recipe has a cycle.
    pub fn topological_tasks(&self) -> Option<Vec<&Task>> {
        let n = self.tasks.len();
        let mut indeg = vec![0usize; n];
        let mut succ = vec![Vec::new(); n];
        for (a, ta) in self.tasks.iter().enumerate() {
            for (b, tb) in self.tasks.iter().enumerate() {
                if a != b && ta.produce.keys().any(|s| tb.consume.contains_key(s)) {
                    succ[a].push(b);
                    indeg[b] += 1;
                }
            }
        }
        let mut ready: BTreeSet<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(&i) = ready.iter().next() {
            ready.remove(&i);
            order.push(&self.tasks[i]);
            for &s in &succ[i] {
                indeg[s] -= 1;
                if indeg[s] == 0 {
                    ready.insert(s);
                }
            }
        }
        (order.len() == n).then_some(order)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StnReport {
    pub errors: Vec<String>,
}

impl StnReport {
    pub fn is_valid(&self) -> bool {
        self.errors.is_empty()
    }
}

/// Structural checks: identifiers, arcs between declared states and tasks,
/// fraction sums, unit eligibility and batch windows.
pub fn validate_stn(stn: &StateTaskNetwork) -> StnReport {
    let mut r = StnReport::default();
    let mut ids = BTreeSet::new();
    for id in stn.states.iter().map(|s| &s.id).chain(stn.tasks.iter().map(|t| &t.id)) {
        if !ids.insert(id) {
            r.errors.push(format!("id `{id}` is used twice; states and tasks must be distinct nodes"));
        }
    }
    for s in &stn.states {
        if !(s.demand >= 0.0) || !s.demand.is_finite() {
            r.errors.push(format!("state `{}` demand {} must be finite and nonnegative", s.id, s.demand));
        }
    }
    if stn.horizon == 0 {
        r.errors.push("horizon must be at least 1".into());
    }
    for t in &stn.tasks {
        if t.units.is_empty() {
            r.errors.push(format!("task `{}` has no eligible unit", t.id));
        }
        let mut seen_units = BTreeSet::new();
        for u in &t.units {
            if !seen_units.insert(&u.unit) {
                r.errors.push(format!("task `{}` lists unit `{}` twice", t.id, u.unit));
            }
            if u.p == 0 {
                r.errors.push(format!("task `{}` on unit `{}` needs processing time >= 1", t.id, u.unit));
            }
            if !(0.0 <= u.b.0 && u.b.0 <= u.b.1 && u.b.1.is_finite()) {
                r.errors.push(format!("task `{}` on unit `{}` has invalid batch window [{}, {}]", t.id, u.unit, u.b.0, u.b.1));
            }
        }
        for (side, fractions) in [("consume", &t.consume), ("produce", &t.produce)] {
            for (s, f) in fractions {
                if stn.state(s).is_none() {
                    r.errors.push(format!("task `{}` {side} arc names unknown state `{s}`", t.id));
                }
                if !(*f > 0.0) {
                    r.errors.push(format!("task `{}` {side} fraction for `{s}` must be positive", t.id));
                }
            }
            let total: f64 = fractions.values().sum();
            let required = side == "produce" || !fractions.is_empty();
            if required && (total - 1.0).abs() > 1e-9 {
                r.errors.push(format!("task `{}` {side} fractions sum to {total}, expected 1", t.id));
            }
        }
        if !t.alpha.is_finite() || !t.beta.is_finite() || t.alpha < 0.0 || t.beta < 0.0 {
            r.errors.push(format!("task `{}` duration coefficients must be finite and nonnegative", t.id));
        }
    }
    r
}

pub(crate) fn require_valid(stn: &StateTaskNetwork) -> Result<(), StnError> {
    let r = validate_stn(stn);
    if r.is_valid() {
        Ok(())
    } else {
        Err(StnError::Invalid(r.errors))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleEntry {
    pub task: String,
    pub unit: String,
    pub start: f64,
    pub duration: f64,
    pub batch: f64,
}

impl ScheduleEntry {
    pub fn end(&self) -> f64 {
        self.start + self.duration
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Schedule {
    pub entries: Vec<ScheduleEntry>,
}

/// Completion time of the last entry; 0 for an empty schedule.
pub fn makespan(schedule: &Schedule) -> f64 {
    schedule.entries.iter().map(ScheduleEntry::end).fold(0.0, f64::max)
}

/// Inventory of every state after all events at each event time, with
/// production at a time point available to consumption at the same point.
pub fn inventory_profile(stn: &StateTaskNetwork, schedule: &Schedule) -> BTreeMap<String, Vec<(f64, f64)>> {
    let mut events: Vec<(f64, u8, &str, f64)> = Vec::new();
    for e in &schedule.entries {
        let Some(task) = stn.task(&e.task) else { continue };
        for (s, f) in &task.produce {
            events.push((e.end(), 0, s, f * e.batch));
        }
        for (s, f) in &task.consume {
            events.push((e.start, 1, s, -f * e.batch));
        }
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut level: BTreeMap<String, f64> = stn.states.iter().map(|s| (s.id.clone(), 0.0)).collect();
    let mut out: BTreeMap<String, Vec<(f64, f64)>> = stn.states.iter().map(|s| (s.id.clone(), Vec::new())).collect();
    let mut idx = 0;
    while idx < events.len() {
        let time = events[idx].0;
        let mut touched = BTreeSet::new();
        while idx < events.len() && events[idx].0 == time {
            let (_, _, s, delta) = events[idx];
            if let Some(v) = level.get_mut(s) {
                *v += delta;
                touched.insert(s);
            }
            idx += 1;
        }
        for s in touched {
            out.get_mut(s).expect("state").push((time, level[s]));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScheduleReport {
    pub violations: Vec<String>,
    pub makespan: f64,
    pub final_inventory: BTreeMap<String, f64>,
}

impl ScheduleReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Simulates the schedule: eligibility and batch windows, durations,
/// unit overlaps, nonnegative inventories of produced states at every
/// event, and final demands.
pub fn validate_schedule(stn: &StateTaskNetwork, schedule: &Schedule, tol: f64) -> ScheduleReport {
    let mut r = ScheduleReport { makespan: makespan(schedule), ..Default::default() };
    for (n, e) in schedule.entries.iter().enumerate() {
        let Some(task) = stn.task(&e.task) else {
            r.violations.push(format!("entry {n}: unknown task `{}`", e.task));
            continue;
        };
        let Some(spec) = task.units.iter().find(|u| u.unit == e.unit) else {
            r.violations.push(format!("entry {n}: unit `{}` cannot run task `{}`", e.unit, e.task));
            continue;
        };
        if e.batch < spec.b.0 - tol || e.batch > spec.b.1 + tol {
            r.violations.push(format!(
                "entry {n}: batch {} of `{}` outside [{}, {}]",
                e.batch, e.task, spec.b.0, spec.b.1
            ));
        }
        let fixed = spec.p as f64;
        let variable = task.alpha + task.beta * e.batch;
        let varies = task.alpha != 0.0 || task.beta != 0.0;
        if (e.duration - fixed).abs() > tol && !(varies && (e.duration - variable).abs() <= tol) {
            r.violations.push(format!("entry {n}: duration {} of `{}` does not match its processing time", e.duration, e.task));
        }
        if e.start < -tol {
            r.violations.push(format!("entry {n}: negative start {}", e.start));
        }
    }
    let mut by_unit: BTreeMap<&str, Vec<&ScheduleEntry>> = BTreeMap::new();
    for e in &schedule.entries {
        by_unit.entry(&e.unit).or_default().push(e);
    }
    for (unit, mut list) in by_unit {
        list.sort_by(|a, b| a.start.total_cmp(&b.start));
        for w in list.windows(2) {
            if w[1].start < w[0].end() - tol {
                r.violations.push(format!(
                    "unit `{unit}`: `{}` at {} overlaps `{}` running until {}",
                    w[1].task,
                    w[1].start,
                    w[0].task,
                    w[0].end()
                ));
            }
        }
    }
    for (s, profile) in inventory_profile(stn, schedule) {
        if !stn.is_raw(&s) {
            if let Some(&(t, v)) = profile.iter().find(|(_, v)| *v < -tol) {
                r.violations.push(format!("state `{s}`: inventory {v} is negative at time {t}"));
            }
        }
        let last = profile.last().map_or(0.0, |p| p.1);
        let demand = stn.state(&s).map_or(0.0, |x| x.demand);
        if !stn.is_raw(&s) && last < demand - tol {
            r.violations.push(format!("state `{s}`: final inventory {last} below demand {demand}"));
        }
        r.final_inventory.insert(s, last);
    }
    r
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn simple_networks_are_valid() {
        assert!(validate_stn(&single_task()).is_valid());
        assert!(validate_stn(&chain()).is_valid());
        assert!(validate_stn(&kondili()).is_valid());
    }

    #[test]
    fn fraction_sum_is_checked() {
        let mut stn = single_task();
        stn.tasks[0].produce.insert("s".into(), 0.9);
        let r = validate_stn(&stn);
        assert!(r.errors.iter().any(|e| e.contains("sum to 0.9")));
    }

    #[test]
    fn makespan_examples() {
        assert_eq!(makespan(&Schedule::default()), 0.0);
        let one = Schedule { entries: vec![entry("make", "u", 0.0, 2.0, 5.0)] };
        assert_eq!(makespan(&one), 2.0);
        let two = Schedule { entries: vec![entry("a", "u", 0.0, 2.0, 1.0), entry("b", "v", 0.0, 3.0, 1.0)] };
        assert_eq!(makespan(&two), 3.0);
    }

    #[test]
    fn single_task_schedule_checks() {
        let stn = single_task();
        let good = Schedule { entries: vec![entry("make", "u", 0.0, 2.0, 5.0)] };
        assert!(validate_schedule(&stn, &good, 1e-6).is_feasible());
        let big = Schedule { entries: vec![entry("make", "u", 0.0, 2.0, 6.0)] };
        let r = validate_schedule(&stn, &big, 1e-6);
        assert!(r.violations.iter().any(|v| v.contains("outside")));
    }

    #[test]
    fn consumer_before_producer_goes_negative() {
        let stn = chain();
        let early = Schedule {
            entries: vec![entry("first", "u1", 1.0, 1.0, 5.0), entry("second", "u2", 1.0, 1.0, 5.0)],
        };
        let r = validate_schedule(&stn, &early, 1e-6);
        assert!(r.violations.iter().any(|v| v.contains("`mid`") && v.contains("negative")), "{r:?}");
        let ok = Schedule {
            entries: vec![entry("first", "u1", 0.0, 1.0, 5.0), entry("second", "u2", 1.0, 1.0, 5.0)],
        };
        assert!(validate_schedule(&stn, &ok, 1e-6).is_feasible());
    }

    #[test]
    fn cycle_has_no_topological_order() {
        assert!(kondili().topological_tasks().is_none());
        let stn = chain();
        let order: Vec<&str> = stn.topological_tasks().unwrap().iter().map(|t| t.id.as_str()).collect();
        assert_eq!(order, ["first", "second"]);
    }
}
