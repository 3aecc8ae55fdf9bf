use std::collections::{BTreeMap, BTreeSet};

use crate::model::{make_certificate, ApproximationCertificate, LinearExpression, LinearModel, ObjectiveSense, RowSense, VariableDef};
use crate::solver::{solve_lp, LpStatus};

use super::matches::{lower_bound_matches, relaxation, route_on_matches, var_q, var_y};
use super::{validate_match_plan, HensError, MatchPlan, TemperatureGrid};

const TOL: f64 = 1e-9;

/// Result of a matches heuristic. `plan` is `None` on a declared failure.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchOutcome {
    pub plan: Option<MatchPlan>,
    pub lower_bound: usize,
    pub certificate: Option<ApproximationCertificate>,
    pub failure: Option<String>,
}

impl MatchOutcome {
    pub fn match_count(&self) -> Option<usize> {
        self.plan.as_ref().map(MatchPlan::match_count)
    }
}

fn finish(grid: &TemperatureGrid, plan: Option<MatchPlan>, failure: &str) -> Result<MatchOutcome, HensError> {
    let lower_bound = lower_bound_matches(grid)?;
    let plan = plan.filter(|p| validate_match_plan(grid, p, 1e-6).is_feasible());
    let certificate = plan
        .as_ref()
        .map(|p| make_certificate(ObjectiveSense::Minimize, p.match_count() as f64, lower_bound as f64));
    let failure = plan.is_none().then(|| failure.to_string());
    Ok(MatchOutcome { plan, lower_bound, certificate, failure })
}

fn require_balanced(grid: &TemperatureGrid) -> Result<(), HensError> {
    if grid.is_balanced() {
        Ok(())
    } else {
        Err(HensError::Unbalanced { supply: grid.total_supply(), demand: grid.total_demand() })
    }
}

/// Opens pairs in decreasing order of their relaxed match variable until
/// the open set can route all heat, then closes every pair that is not
/// needed, least attractive first.
pub fn lp_round_matches(grid: &TemperatureGrid) -> Result<MatchOutcome, HensError> {
    require_balanced(grid)?;
    let (_, relaxed) = relaxation(grid)?;
    let mut order: Vec<(f64, usize, usize)> = (0..grid.hot.len())
        .flat_map(|i| (0..grid.cold.len()).map(move |j| (i, j)))
        .map(|(i, j)| (relaxed.get(&var_y(i, j)).unwrap_or(0.0), i, j))
        .collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0).then((a.1, a.2).cmp(&(b.1, b.2))));
    let mut open = BTreeSet::new();
    let mut plan = None;
    for &(_, i, j) in &order {
        open.insert((i, j));
        if let Some(p) = route_on_matches(grid, &open)? {
            plan = Some(p);
            break;
        }
    }
    if order.is_empty() {
        plan = route_on_matches(grid, &open)?;
    }
    if plan.is_some() {
        let opened: Vec<(usize, usize)> = order.iter().map(|&(_, i, j)| (i, j)).filter(|p| open.contains(p)).collect();
        for pair in opened.into_iter().rev() {
            open.remove(&pair);
            if route_on_matches(grid, &open)?.is_none() {
                open.insert(pair);
            }
        }
        plan = route_on_matches(grid, &open)?;
    }
    finish(grid, plan, "no subset of matches routes the heat")
}

/// Pair with the largest `min(a, b)`; ties to the lowest (hot, cold).
fn best_pair<I: Iterator<Item = (usize, usize)>>(pairs: I, hot: &[f64], cold: &[f64]) -> Option<(usize, usize)> {
    let mut best: Option<(f64, usize, usize)> = None;
    for (i, j) in pairs {
        let v = hot[i].min(cold[j]);
        if v <= TOL {
            continue;
        }
        if best.is_none_or(|b| v > b.0 + TOL) {
            best = Some((v, i, j));
        }
    }
    best.map(|(_, i, j)| (i, j))
}

/// Interval by interval from the top: demands are filled from the available
/// hot heat, using already open matches first and otherwise opening the
/// pair that can exchange the most. Unused hot heat cascades down.
pub fn water_filling_matches(grid: &TemperatureGrid) -> Result<MatchOutcome, HensError> {
    require_balanced(grid)?;
    let (nh, nc) = (grid.hot.len(), grid.cold.len());
    // available[i] holds (origin interval, amount) in top-down order
    let mut available: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nh];
    let mut plan = MatchPlan::default();
    for t in 0..grid.intervals() {
        for i in 0..nh {
            if grid.sigma[i][t] > TOL {
                available[i].push((t, grid.sigma[i][t]));
            }
        }
        let mut demand: Vec<f64> = (0..nc).map(|j| grid.delta[j][t]).collect();
        loop {
            let supply: Vec<f64> = available.iter().map(|a| a.iter().map(|x| x.1).sum()).collect();
            let open_pick = best_pair(plan.open.iter().copied(), &supply, &demand);
            let all = (0..nh).flat_map(|i| (0..nc).map(move |j| (i, j)));
            let Some((i, j)) = open_pick.or_else(|| best_pair(all, &supply, &demand)) else { break };
            let mut amount = supply[i].min(demand[j]);
            demand[j] -= amount;
            for slot in available[i].iter_mut() {
                let take = slot.1.min(amount);
                if take > 0.0 {
                    plan.add((i, slot.0, j, t), take);
                    slot.1 -= take;
                    amount -= take;
                }
                if amount <= 0.0 {
                    break;
                }
            }
            available[i].retain(|x| x.1 > TOL);
        }
        if demand.iter().any(|d| *d > 1e-7) {
            return finish(grid, None, "hot heat above this interval cannot cover its demand");
        }
    }
    finish(grid, Some(plan), "heat left over after the bottom interval")
}

/// Heat one pair alone can exchange: a top-down cascade of the hot
/// stream's residual supplies into the cold stream's residual demands.
fn pair_cascade(sigma: &[f64], delta: &[f64]) -> f64 {
    let mut carry = 0.0;
    let mut total = 0.0;
    for (s, d) in sigma.iter().zip(delta) {
        carry += s;
        let x = carry.min(*d);
        carry -= x;
        total += x;
    }
    total
}

/// Routes as much heat as possible on pair `(hi, cj)` while the remaining
/// supplies and demands stay routable on the other pairs.
fn max_pair_routing(
    sigma: &[Vec<f64>],
    delta: &[Vec<f64>],
    hi: usize,
    cj: usize,
) -> Result<BTreeMap<(usize, usize), f64>, HensError> {
    let r = sigma.first().or(delta.first()).map_or(0, Vec::len);
    let mut m = LinearModel::new(ObjectiveSense::Maximize);
    let mut hot_rows: BTreeMap<(usize, usize), LinearExpression> = BTreeMap::new();
    let mut cold_rows: BTreeMap<(usize, usize), LinearExpression> = BTreeMap::new();
    let mut objective = LinearExpression::new();
    for (i, srow) in sigma.iter().enumerate() {
        for (j, drow) in delta.iter().enumerate() {
            for s in (0..r).filter(|&s| srow[s] > TOL) {
                for t in (s..r).filter(|&t| drow[t] > TOL) {
                    let q = var_q(i, s, j, t);
                    m.add_variable(VariableDef::nonnegative(&q))?;
                    hot_rows.entry((i, s)).or_default().add_term(&q, 1.0);
                    cold_rows.entry((j, t)).or_default().add_term(&q, 1.0);
                    if (i, j) == (hi, cj) {
                        objective.add_term(&q, 1.0);
                    }
                }
            }
        }
    }
    m.set_objective(objective)?;
    for ((i, s), e) in hot_rows {
        m.add_constraint(format!("hot_{i}_{s}"), e, RowSense::Eq, sigma[i][s])?;
    }
    for ((j, t), e) in cold_rows {
        m.add_constraint(format!("cold_{j}_{t}"), e, RowSense::Eq, delta[j][t])?;
    }
    let out = solve_lp(&m);
    let mut routed = BTreeMap::new();
    if let (LpStatus::Optimal, Some(a)) = (out.status, out.primal) {
        for s in 0..r {
            for t in s..r {
                if let Some(v) = a.get(&var_q(hi, s, cj, t)).filter(|v| *v > TOL) {
                    routed.insert((s, t), v);
                }
            }
        }
    }
    Ok(routed)
}

/// Repeatedly picks the unused pair that could exchange the most heat on
/// its own and routes as much as possible through it, keeping the rest of
/// the problem routable.
pub fn greedy_packing_matches(grid: &TemperatureGrid) -> Result<MatchOutcome, HensError> {
    require_balanced(grid)?;
    let (nh, nc) = (grid.hot.len(), grid.cold.len());
    let mut sigma = grid.sigma.clone();
    let mut delta = grid.delta.clone();
    let mut used = BTreeSet::new();
    let mut plan = MatchPlan::default();
    let remaining = |s: &Vec<Vec<f64>>| s.iter().flatten().sum::<f64>();
    while remaining(&sigma) > 1e-7 {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..nh {
            for j in 0..nc {
                if used.contains(&(i, j)) {
                    continue;
                }
                let v = pair_cascade(&sigma[i], &delta[j]);
                if v > TOL && best.is_none_or(|b| v > b.0 + TOL) {
                    best = Some((v, i, j));
                }
            }
        }
        let Some((_, i, j)) = best else {
            return finish(grid, None, "residual heat has no pair left to carry it");
        };
        used.insert((i, j));
        for ((s, t), v) in max_pair_routing(&sigma, &delta, i, j)? {
            plan.add((i, s, j, t), v);
            sigma[i][s] = (sigma[i][s] - v).max(0.0);
            delta[j][t] = (delta[j][t] - v).max(0.0);
        }
    }
    plan.q.retain(|_, v| *v > TOL);
    plan.open = plan.q.keys().map(|&(i, _, j, _)| (i, j)).collect();
    finish(grid, Some(plan), "greedy packing left residual heat")
}

/// Largest-first pairing for a single interval: the largest residual hot
/// load is matched with the largest residual cold load, exchanging the
/// smaller of the two.
pub fn single_interval_matches(grid: &TemperatureGrid) -> Result<MatchOutcome, HensError> {
    if grid.intervals() != 1 {
        return Err(HensError::NotSingleInterval(grid.intervals()));
    }
    require_balanced(grid)?;
    let mut hot: Vec<f64> = grid.sigma.iter().map(|s| s[0]).collect();
    let mut cold: Vec<f64> = grid.delta.iter().map(|d| d[0]).collect();
    let largest = |v: &[f64]| {
        v.iter()
            .enumerate()
            .filter(|(_, x)| **x > TOL)
            .fold(None::<(usize, f64)>, |b, (k, &x)| match b {
                Some((_, bx)) if bx >= x - TOL => b,
                _ => Some((k, x)),
            })
    };
    let mut plan = MatchPlan::default();
    while let (Some((i, h)), Some((j, c))) = (largest(&hot), largest(&cold)) {
        let amount = h.min(c);
        plan.add((i, 0, j, 0), amount);
        hot[i] -= amount;
        cold[j] -= amount;
        if hot[i] <= TOL {
            hot[i] = 0.0;
        }
        if cold[j] <= TOL {
            cold[j] = 0.0;
        }
    }
    finish(grid, Some(plan), "loads left after pairing")
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::super::{match_grid, HensInstance, Stream};
    use super::*;

    fn all(grid: &TemperatureGrid) -> Vec<MatchOutcome> {
        vec![
            lp_round_matches(grid).unwrap(),
            water_filling_matches(grid).unwrap(),
            greedy_packing_matches(grid).unwrap(),
        ]
    }

    #[test]
    fn six_four_heuristics() {
        let grid = match_grid(&six_four()).unwrap();
        let mut outs = all(&grid);
        outs.push(single_interval_matches(&grid).unwrap());
        for out in outs {
            let n = out.match_count().expect("plan");
            assert!((3..=4).contains(&n), "{n}");
            let cert = out.certificate.unwrap();
            assert!(cert.ratio.unwrap() >= 1.0);
        }
        assert_eq!(single_interval_matches(&grid).unwrap().match_count(), Some(3));
    }

    #[test]
    fn one_pair_single_match() {
        let grid = match_grid(&pair(2.0, 2.0)).unwrap();
        for out in all(&grid) {
            assert_eq!(out.match_count(), Some(1));
            assert_eq!(out.certificate.unwrap().ratio, Some(1.0));
        }
    }

    #[test]
    fn perfect_matching_single_interval() {
        let s = |id: &str, hot: bool| if hot { Stream::new(id, 11.0, 10.0, 3.0) } else { Stream::new(id, 10.0, 11.0, 3.0) };
        let inst = HensInstance::new(vec![s("a", true), s("b", true), s("c", true)], vec![s("x", false), s("y", false), s("z", false)]);
        let grid = match_grid(&inst).unwrap();
        assert_eq!(single_interval_matches(&grid).unwrap().match_count(), Some(3));
    }

    #[test]
    fn cascading_two_intervals() {
        let inst = HensInstance::new(
            vec![Stream::new("h1", 200.0, 100.0, 1.0), Stream::new("h2", 150.0, 100.0, 2.0)],
            vec![Stream::new("c1", 100.0, 150.0, 2.0), Stream::new("c2", 100.0, 200.0, 1.0)],
        );
        let grid = match_grid(&inst).unwrap();
        assert_eq!(grid.intervals(), 2);
        for out in all(&grid) {
            assert!(out.plan.is_some(), "{:?}", out.failure);
        }
        assert!(matches!(single_interval_matches(&grid), Err(HensError::NotSingleInterval(2))));
    }
}
