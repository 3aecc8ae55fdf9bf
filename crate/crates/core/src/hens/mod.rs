//! Heat exchanger network synthesis: temperature intervals, minimum utility
//! cost, minimum number of matches, and the multistage utility model.

mod grid;
mod heuristics;
mod matches;
mod multistage;
mod oracle;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::ModelError;

pub use grid::{
    build_temperature_intervals, embed_utilities, match_grid, min_utility_cascade, min_utility_lp,
    utility_energy_lower_bound, TemperatureGrid, UtilityTargets, COLD_UTILITY, HOT_UTILITY,
};
pub use heuristics::{
    greedy_packing_matches, lp_round_matches, single_interval_matches, water_filling_matches, MatchOutcome,
};
pub use matches::{build_matches_milp, lower_bound_matches, route_on_matches, solve_matches_exact, MatchesOptions};
pub use multistage::{
    alternating_multistage_heuristic, build_multistage_qp, check_multistage_solution, MultistageCandidate,
    MultistageOptions, MultistageOutcome, Monotonicity,
};
pub use oracle::{brute_force_min_matches, single_interval_optimum, MAX_BRUTE_FORCE_PAIRS};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HensError {
    #[error("invalid heat exchanger instance: {}", .0.join("; "))]
    InvalidInstance(Vec<String>),
    #[error("heat supply {supply} differs from demand {demand}; embed utilities from the minimum utility cascade first")]
    Unbalanced { supply: f64, demand: f64 },
    #[error("single-interval method needs exactly one temperature interval, got {0}")]
    NotSingleInterval(usize),
    #[error("the multistage model needs at least one stage")]
    NoStages,
    #[error("brute force limited to {limit} stream pairs, instance has {actual}")]
    TooLarge { limit: usize, actual: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamKind {
    Hot,
    Cold,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stream {
    pub id: String,
    pub t_in: f64,
    pub t_out: f64,
    /// Flow-rate heat capacity.
    #[serde(rename = "F")]
    pub f: f64,
}

impl Stream {
    pub fn new(id: impl Into<String>, t_in: f64, t_out: f64, f: f64) -> Self {
        Stream { id: id.into(), t_in, t_out, f }
    }

    /// Heat released (hot) or absorbed (cold) between inlet and outlet.
    pub fn load(&self) -> f64 {
        self.f * (self.t_in - self.t_out).abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HensInstance {
    pub hot: Vec<Stream>,
    pub cold: Vec<Stream>,
    #[serde(default)]
    pub dt_min: f64,
    #[serde(default = "one")]
    pub cost_hu: f64,
    #[serde(default = "one")]
    pub cost_cu: f64,
}

fn one() -> f64 {
    1.0
}

impl HensInstance {
    pub fn new(hot: Vec<Stream>, cold: Vec<Stream>) -> Self {
        HensInstance { hot, cold, dt_min: 0.0, cost_hu: 1.0, cost_cu: 1.0 }
    }

    pub fn total_hot_load(&self) -> f64 {
        self.hot.iter().map(Stream::load).sum()
    }

    pub fn total_cold_load(&self) -> f64 {
        self.cold.iter().map(Stream::load).sum()
    }
}

pub fn validate_instance(inst: &HensInstance) -> Vec<String> {
    let mut errors = Vec::new();
    let mut ids = BTreeSet::new();
    for (kind, streams) in [(StreamKind::Hot, &inst.hot), (StreamKind::Cold, &inst.cold)] {
        for s in streams {
            if !ids.insert(&s.id) {
                errors.push(format!("stream id `{}` is used twice", s.id));
            }
            if !(s.t_in.is_finite() && s.t_out.is_finite()) {
                errors.push(format!("stream `{}` has a non-finite temperature", s.id));
            }
            match kind {
                StreamKind::Hot if !(s.t_in > s.t_out) => {
                    errors.push(format!("hot stream `{}` must cool down (t_in {} <= t_out {})", s.id, s.t_in, s.t_out))
                }
                StreamKind::Cold if !(s.t_in < s.t_out) => {
                    errors.push(format!("cold stream `{}` must heat up (t_in {} >= t_out {})", s.id, s.t_in, s.t_out))
                }
                _ => {}
            }
            if !(s.f > 0.0 && s.f.is_finite()) {
                errors.push(format!("stream `{}` needs a positive finite F", s.id));
            }
        }
    }
    for (name, v) in [("dt_min", inst.dt_min), ("cost_hu", inst.cost_hu), ("cost_cu", inst.cost_cu)] {
        if !(v >= 0.0 && v.is_finite()) {
            errors.push(format!("{name} must be finite and nonnegative"));
        }
    }
    errors
}

pub(crate) fn require_valid(inst: &HensInstance) -> Result<(), HensError> {
    let errors = validate_instance(inst);
    if errors.is_empty() {
        Ok(())
    } else {
        Err(HensError::InvalidInstance(errors))
    }
}

/// Open matches and heat routing `q[(i, s, j, t)]` from hot stream `i` in
/// interval `s` to cold stream `j` in interval `t`; indices refer to a
/// [`TemperatureGrid`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MatchPlan {
    pub open: BTreeSet<(usize, usize)>,
    pub q: BTreeMap<(usize, usize, usize, usize), f64>,
}

impl MatchPlan {
    /// Plan whose open matches are exactly the pairs carrying heat.
    pub fn from_routing(q: BTreeMap<(usize, usize, usize, usize), f64>, tol: f64) -> Self {
        let q: BTreeMap<_, _> = q.into_iter().filter(|(_, v)| *v > tol).collect();
        let open = q.keys().map(|&(i, _, j, _)| (i, j)).collect();
        MatchPlan { open, q }
    }

    pub fn match_count(&self) -> usize {
        self.open.len()
    }

    pub(crate) fn add(&mut self, key: (usize, usize, usize, usize), amount: f64) {
        *self.q.entry(key).or_insert(0.0) += amount;
        self.open.insert((key.0, key.2));
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MatchReport {
    pub violations: Vec<String>,
    pub match_count: usize,
}

impl MatchReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks conservation of every interval supply and demand, that no heat
/// moves to a hotter interval, and that heat only flows on open matches.
pub fn validate_match_plan(grid: &TemperatureGrid, plan: &MatchPlan, tol: f64) -> MatchReport {
    let mut r = MatchReport { match_count: plan.match_count(), ..Default::default() };
    let (nh, nc, nt) = (grid.hot.len(), grid.cold.len(), grid.intervals());
    let mut out = vec![vec![0.0; nt]; nh];
    let mut inflow = vec![vec![0.0; nt]; nc];
    for (&(i, s, j, t), &v) in &plan.q {
        if i >= nh || j >= nc || s >= nt || t >= nt {
            r.violations.push(format!("routing entry ({i}, {s}, {j}, {t}) is outside the grid"));
            continue;
        }
        if v < -tol {
            r.violations.push(format!("negative heat {v} from `{}` to `{}`", grid.hot[i], grid.cold[j]));
        }
        if s > t && v > tol {
            r.violations.push(format!(
                "heat {v} flows from `{}` in interval {s} up to `{}` in hotter interval {t}",
                grid.hot[i], grid.cold[j]
            ));
        }
        if v > tol && !plan.open.contains(&(i, j)) {
            r.violations.push(format!("heat {v} on closed match (`{}`, `{}`)", grid.hot[i], grid.cold[j]));
        }
        out[i][s] += v;
        inflow[j][t] += v;
    }
    for i in 0..nh {
        for s in 0..nt {
            if (out[i][s] - grid.sigma[i][s]).abs() > tol {
                r.violations.push(format!(
                    "hot `{}` interval {s}: routes {} of supply {}",
                    grid.hot[i], out[i][s], grid.sigma[i][s]
                ));
            }
        }
    }
    for j in 0..nc {
        for t in 0..nt {
            if (inflow[j][t] - grid.delta[j][t]).abs() > tol {
                r.violations.push(format!(
                    "cold `{}` interval {t}: receives {} of demand {}",
                    grid.cold[j], inflow[j][t], grid.delta[j][t]
                ));
            }
        }
    }
    r
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn validation_catches_reversed_streams() {
        let mut inst = pair(2.0, 2.0);
        inst.hot[0].t_out = 200.0;
        inst.cold[0].f = 0.0;
        let errors = validate_instance(&inst);
        assert_eq!(errors.len(), 2, "{errors:?}");
    }

    #[test]
    fn plan_violations_are_named() {
        let grid = build_temperature_intervals(&pair(2.0, 2.0)).unwrap();
        let mut plan = MatchPlan::default();
        plan.q.insert((0, 2, 0, 1), 1.0);
        let r = validate_match_plan(&grid, &plan, 1e-6);
        assert!(r.violations.iter().any(|v| v.contains("hotter interval")));
        assert!(r.violations.iter().any(|v| v.contains("closed match")));
    }
}
