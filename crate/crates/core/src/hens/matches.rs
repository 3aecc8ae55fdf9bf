use std::collections::{BTreeMap, BTreeSet};

use crate::model::{Assignment, LinearExpression, LinearModel, ObjectiveSense, RowSense, VariableDef};
use crate::solver::{solve_lp, solve_milp, LpStatus, MilpLimits, MilpOutcome};

use super::{HensError, MatchPlan, TemperatureGrid};

const TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MatchesOptions {
    /// Leave out variables for upward heat flow instead of pinning them to
    /// zero with explicit rows.
    pub compact: bool,
}

pub(crate) fn var_y(i: usize, j: usize) -> String {
    format!("y_{i}_{j}")
}

pub(crate) fn var_q(i: usize, s: usize, j: usize, t: usize) -> String {
    format!("q_{i}_{s}_{j}_{t}")
}

fn supply_nodes(grid: &TemperatureGrid) -> Vec<(usize, usize)> {
    (0..grid.hot.len())
        .flat_map(|i| (0..grid.intervals()).map(move |s| (i, s)))
        .filter(|&(i, s)| grid.sigma[i][s] > TOL)
        .collect()
}

fn demand_nodes(grid: &TemperatureGrid) -> Vec<(usize, usize)> {
    (0..grid.cold.len())
        .flat_map(|j| (0..grid.intervals()).map(move |t| (j, t)))
        .filter(|&(j, t)| grid.delta[j][t] > TOL)
        .collect()
}

fn require_balanced(grid: &TemperatureGrid) -> Result<(), HensError> {
    if grid.is_balanced() {
        Ok(())
    } else {
        Err(HensError::Unbalanced { supply: grid.total_supply(), demand: grid.total_demand() })
    }
}

/// Transportation MILP over supply nodes `(i, s)` and demand nodes `(j, t)`
/// with one binary per stream pair and big-M `min(h_i, c_j)`.
pub fn build_matches_milp(grid: &TemperatureGrid, options: MatchesOptions) -> Result<LinearModel, HensError> {
    require_balanced(grid)?;
    let supplies = supply_nodes(grid);
    let demands = demand_nodes(grid);
    let mut m = LinearModel::new(ObjectiveSense::Minimize);
    let mut objective = LinearExpression::new();
    for i in 0..grid.hot.len() {
        for j in 0..grid.cold.len() {
            m.add_variable(VariableDef::binary(var_y(i, j)))?;
            objective.add_term(&var_y(i, j), 1.0);
        }
    }
    m.set_objective(objective)?;
    let mut hot_rows: BTreeMap<(usize, usize), LinearExpression> = BTreeMap::new();
    let mut cold_rows: BTreeMap<(usize, usize), LinearExpression> = BTreeMap::new();
    let mut pair_rows: BTreeMap<(usize, usize), LinearExpression> = BTreeMap::new();
    let mut upward = Vec::new();
    for &(i, s) in &supplies {
        for &(j, t) in &demands {
            if s > t && options.compact {
                continue;
            }
            let q = var_q(i, s, j, t);
            m.add_variable(VariableDef::nonnegative(&q))?;
            hot_rows.entry((i, s)).or_default().add_term(&q, 1.0);
            cold_rows.entry((j, t)).or_default().add_term(&q, 1.0);
            pair_rows.entry((i, j)).or_default().add_term(&q, 1.0);
            if s > t {
                upward.push(q);
            }
        }
    }
    for &(i, s) in &supplies {
        let e = hot_rows.remove(&(i, s)).unwrap_or_default();
        m.add_constraint(format!("hot_{i}_{s}"), e, RowSense::Eq, grid.sigma[i][s])?;
    }
    for &(j, t) in &demands {
        let e = cold_rows.remove(&(j, t)).unwrap_or_default();
        m.add_constraint(format!("cold_{j}_{t}"), e, RowSense::Eq, grid.delta[j][t])?;
    }
    for ((i, j), mut e) in pair_rows {
        let big_m = grid.hot_load(i).min(grid.cold_load(j));
        e.add_term(&var_y(i, j), -big_m);
        m.add_constraint(format!("link_{i}_{j}"), e, RowSense::Le, 0.0)?;
    }
    for q in upward {
        m.add_constraint(format!("thermo_{}", &q[2..]), LinearExpression::new().with(&q, 1.0), RowSense::Eq, 0.0)?;
    }
    Ok(m)
}

pub(crate) fn plan_from_assignment(grid: &TemperatureGrid, a: &Assignment) -> MatchPlan {
    let mut q = BTreeMap::new();
    for &(i, s) in &supply_nodes(grid) {
        for &(j, t) in &demand_nodes(grid) {
            if let Some(v) = a.get(&var_q(i, s, j, t)) {
                q.insert((i, s, j, t), v);
            }
        }
    }
    MatchPlan::from_routing(q, 1e-9)
}

/// Solves the matches MILP; the plan is built from the incumbent routing.
pub fn solve_matches_exact(
    grid: &TemperatureGrid,
    options: MatchesOptions,
    limits: &MilpLimits,
) -> Result<(MilpOutcome, Option<MatchPlan>), HensError> {
    let model = build_matches_milp(grid, options)?;
    let out = solve_milp(&model, limits);
    let plan = out.primal.as_ref().map(|a| plan_from_assignment(grid, a));
    Ok((out, plan))
}

/// Optimum of the LP relaxation and its assignment.
pub(crate) fn relaxation(grid: &TemperatureGrid) -> Result<(f64, Assignment), HensError> {
    let model = build_matches_milp(grid, MatchesOptions { compact: true })?.relax_integrality();
    let out = solve_lp(&model);
    match (out.status, out.primal) {
        (LpStatus::Optimal, Some(a)) => Ok((out.objective, a)),
        _ => Ok((f64::NAN, Assignment::new())),
    }
}

/// Largest of the rounded-up LP relaxation value and the number of hot and
/// of cold streams carrying heat (each needs at least one match).
pub fn lower_bound_matches(grid: &TemperatureGrid) -> Result<usize, HensError> {
    let (lp, _) = relaxation(grid)?;
    let lp_bound = if lp.is_finite() { (lp - 1e-6).ceil().max(0.0) as usize } else { 0 };
    let hot = (0..grid.hot.len()).filter(|&i| grid.hot_load(i) > TOL).count();
    let cold = (0..grid.cold.len()).filter(|&j| grid.cold_load(j) > TOL).count();
    Ok(lp_bound.max(hot).max(cold))
}

/// Routes all heat using only the `open` pairs, or `None` when they cannot
/// carry it without sending heat upward.
pub fn route_on_matches(grid: &TemperatureGrid, open: &BTreeSet<(usize, usize)>) -> Result<Option<MatchPlan>, HensError> {
    let supplies = supply_nodes(grid);
    let demands = demand_nodes(grid);
    let mut m = LinearModel::new(ObjectiveSense::Minimize);
    let mut hot_rows: BTreeMap<(usize, usize), LinearExpression> = BTreeMap::new();
    let mut cold_rows: BTreeMap<(usize, usize), LinearExpression> = BTreeMap::new();
    for &(i, s) in &supplies {
        for &(j, t) in &demands {
            if s <= t && open.contains(&(i, j)) {
                let q = var_q(i, s, j, t);
                m.add_variable(VariableDef::nonnegative(&q))?;
                hot_rows.entry((i, s)).or_default().add_term(&q, 1.0);
                cold_rows.entry((j, t)).or_default().add_term(&q, 1.0);
            }
        }
    }
    for &(i, s) in &supplies {
        let Some(e) = hot_rows.remove(&(i, s)) else { return Ok(None) };
        m.add_constraint(format!("hot_{i}_{s}"), e, RowSense::Eq, grid.sigma[i][s])?;
    }
    for &(j, t) in &demands {
        let Some(e) = cold_rows.remove(&(j, t)) else { return Ok(None) };
        m.add_constraint(format!("cold_{j}_{t}"), e, RowSense::Eq, grid.delta[j][t])?;
    }
    let out = solve_lp(&m);
    if out.status != LpStatus::Optimal {
        return Ok(None);
    }
    let Some(a) = out.primal else { return Ok(None) };
    Ok(Some(plan_from_assignment(grid, &a)))
}
