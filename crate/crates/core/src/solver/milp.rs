use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use crate::model::{LinearModel, DEFAULT_TOL};

use super::simplex::{solve_bounded, LpData};
use super::{LpStatus, MilpOutcome, MilpStatus};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MilpLimits {
    pub node_limit: usize,
    pub time_limit: Option<Duration>,
}

impl Default for MilpLimits {
    fn default() -> Self {
        Self { node_limit: 200_000, time_limit: None }
    }
}

impl MilpLimits {
    pub fn nodes(node_limit: usize) -> Self {
        Self { node_limit, ..Self::default() }
    }
}

struct Node {
    bound: f64,
    depth: usize,
    seq: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
    x: Vec<f64>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // BinaryHeap pops the greatest: smallest bound, then deepest, then oldest.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(self.depth.cmp(&other.depth))
            .then(other.seq.cmp(&self.seq))
    }
}

fn branching_variable(data: &LpData, x: &[f64]) -> Option<usize> {
    let mut pick = None;
    let mut best = DEFAULT_TOL;
    for (j, &v) in x.iter().enumerate() {
        if !data.integer[j] {
            continue;
        }
        let frac = (v - v.floor()).min(v.ceil() - v);
        if frac > best {
            best = frac;
            pick = Some(j);
        }
    }
    pick
}

fn objective_is_integral(data: &LpData) -> bool {
    let int = |v: f64| (v - v.round()).abs() < 1e-12;
    int(data.cost_const)
        && data
            .cost
            .iter()
            .zip(&data.integer)
            .all(|(&c, &is_int)| c == 0.0 || (is_int && int(c)))
}

/// Best-bound branch and bound over [`solve_lp`](super::solve_lp)
/// relaxations, branching on the most fractional integer variable.
pub fn solve_milp(model: &LinearModel, limits: &MilpLimits) -> MilpOutcome {
    let data = LpData::from_model(model);
    let n = data.ids.len();
    let mut lower = data.lower.clone();
    let mut upper = data.upper.clone();
    for j in 0..n {
        if data.integer[j] {
            lower[j] = (lower[j] - 1e-9).ceil();
            upper[j] = (upper[j] + 1e-9).floor();
        }
    }
    let start = Instant::now();
    let finish = |status, incumbent: Option<(f64, Vec<f64>)>, bound: f64, nodes| {
        let (objective, primal) = match incumbent {
            Some((v, x)) => (data.user_objective(v), Some(data.assignment(&x))),
            None => (f64::NAN, None),
        };
        MilpOutcome { status, objective, primal, best_bound: data.user_objective(bound), nodes_explored: nodes }
    };

    let root = solve_bounded(&data, &lower, &upper);
    match root.status {
        LpStatus::Infeasible => return finish(MilpStatus::Infeasible, None, f64::INFINITY, 1),
        LpStatus::Unbounded => return finish(MilpStatus::Unbounded, None, f64::NEG_INFINITY, 1),
        LpStatus::IterationLimit => return finish(MilpStatus::NodeLimit, None, f64::NEG_INFINITY, 1),
        LpStatus::Optimal => {}
    }
    let integral_obj = objective_is_integral(&data);
    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let prunable = |bound: f64, inc: &Option<(f64, Vec<f64>)>| match inc {
        None => false,
        Some((v, _)) if integral_obj => (bound - 1e-6).ceil() > v - 0.5,
        Some((v, _)) => bound >= v - 1e-9 * v.abs().max(1.0),
    };
    let accept = |x: Vec<f64>, inc: &mut Option<(f64, Vec<f64>)>| {
        let mut x = x;
        for j in 0..n {
            if data.integer[j] {
                x[j] = x[j].round();
            }
        }
        let v = data.min_objective(&x);
        if inc.as_ref().is_none_or(|(best, _)| v < *best - 1e-12) {
            *inc = Some((v, x));
        }
    };

    let mut heap = BinaryHeap::new();
    let mut seq = 0usize;
    if branching_variable(&data, &root.x).is_none() {
        accept(root.x.clone(), &mut incumbent);
    } else {
        heap.push(Node { bound: root.objective, depth: 0, seq, lower, upper, x: root.x });
    }
    let mut nodes = 1usize;
    let mut interrupted = false;
    let mut incomplete = false;
    while let Some(node) = heap.pop() {
        if prunable(node.bound, &incumbent) {
            continue;
        }
        let out_of_time = limits.time_limit.is_some_and(|t| start.elapsed() >= t);
        if nodes >= limits.node_limit || out_of_time {
            heap.push(node);
            interrupted = true;
            break;
        }
        let Some(j) = branching_variable(&data, &node.x) else {
            continue;
        };
        let v = node.x[j];
        for up in [false, true] {
            let mut lo = node.lower.clone();
            let mut hi = node.upper.clone();
            if up {
                lo[j] = v.ceil();
            } else {
                hi[j] = v.floor();
            }
            if lo[j] > hi[j] {
                continue;
            }
            nodes += 1;
            let child = solve_bounded(&data, &lo, &hi);
            match child.status {
                LpStatus::Optimal => {}
                LpStatus::Infeasible => continue,
                _ => {
                    incomplete = true;
                    continue;
                }
            }
            if prunable(child.objective, &incumbent) {
                continue;
            }
            if branching_variable(&data, &child.x).is_none() {
                accept(child.x, &mut incumbent);
            } else {
                seq += 1;
                heap.push(Node {
                    bound: child.objective.max(node.bound),
                    depth: node.depth + 1,
                    seq,
                    lower: lo,
                    upper: hi,
                    x: child.x,
                });
            }
        }
    }
    let open_bound = heap
        .iter()
        .filter(|nd| !prunable(nd.bound, &incumbent))
        .map(|nd| nd.bound)
        .fold(f64::INFINITY, f64::min);
    let inc_value = incumbent.as_ref().map_or(f64::INFINITY, |(v, _)| *v);
    if interrupted || incomplete {
        let bound = if incomplete { f64::NEG_INFINITY } else { open_bound.min(inc_value) };
        let status = if incumbent.is_some() { MilpStatus::FeasibleLimit } else { MilpStatus::NodeLimit };
        return finish(status, incumbent, bound, nodes);
    }
    match incumbent {
        Some(inc) => {
            let v = inc.0;
            finish(MilpStatus::Optimal, Some(inc), v, nodes)
        }
        None => finish(MilpStatus::Infeasible, None, f64::INFINITY, nodes),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{LinearExpression, ObjectiveSense, RowSense, VariableDef};

    #[test]
    fn single_binary_maximum() {
        let mut m = LinearModel::new(ObjectiveSense::Maximize);
        m.add_variable(VariableDef::binary("x")).unwrap();
        m.set_objective(LinearExpression::from_terms([("x", 1.0)])).unwrap();
        let out = solve_milp(&m, &MilpLimits::default());
        assert_eq!(out.status, MilpStatus::Optimal);
        assert_eq!(out.objective, 1.0);
    }

    #[test]
    fn infeasible_binary() {
        let mut m = LinearModel::new(ObjectiveSense::Minimize);
        m.add_variable(VariableDef::binary("x")).unwrap();
        m.add_constraint("c", LinearExpression::from_terms([("x", 1.0)]), RowSense::Ge, 2.0).unwrap();
        assert_eq!(solve_milp(&m, &MilpLimits::default()).status, MilpStatus::Infeasible);
    }

    #[test]
    fn knapsack_needs_branching() {
        // max 5a + 4b + 3c s.t. 2a + 3b + c <= 5: the LP picks a, c and 2/3 of b, the
        // integer optimum takes a and b
        let mut m = LinearModel::new(ObjectiveSense::Maximize);
        for id in ["a", "b", "c"] {
            m.add_variable(VariableDef::binary(id)).unwrap();
        }
        m.set_objective(LinearExpression::from_terms([("a", 5.0), ("b", 4.0), ("c", 3.0)])).unwrap();
        m.add_constraint(
            "cap",
            LinearExpression::from_terms([("a", 2.0), ("b", 3.0), ("c", 1.0)]),
            RowSense::Le,
            5.0,
        )
        .unwrap();
        let out = solve_milp(&m, &MilpLimits::default());
        assert_eq!(out.status, MilpStatus::Optimal);
        assert!((out.objective - 9.0).abs() < 1e-9);
        assert!(out.best_bound >= out.objective - 1e-9);
    }

    #[test]
    fn node_limit_reports_honest_status() {
        let mut m = LinearModel::new(ObjectiveSense::Maximize);
        let ids: Vec<String> = (0..12).map(|i| format!("x{i}")).collect();
        let mut row = LinearExpression::new();
        let mut obj = LinearExpression::new();
        for (i, id) in ids.iter().enumerate() {
            m.add_variable(VariableDef::binary(id.clone())).unwrap();
            row.add_term(id, 2.0);
            obj.add_term(id, 1.0 + (i as f64) * 0.01);
        }
        m.set_objective(obj).unwrap();
        m.add_constraint("odd", row, RowSense::Le, 11.0).unwrap();
        let out = solve_milp(&m, &MilpLimits::nodes(1));
        assert!(matches!(out.status, MilpStatus::NodeLimit | MilpStatus::FeasibleLimit));
    }
}
