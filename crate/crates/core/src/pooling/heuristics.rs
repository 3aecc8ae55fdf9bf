use std::collections::BTreeMap;

use crate::exec::{map_ordered, Execution};
use crate::model::{
    make_certificate, ApproximationCertificate, Assignment, BilinearModel, LinearExpression,
    LinearModel, ObjectiveSense, RowSense, VariableDef,
};
use crate::solver::{solve_lp, solve_milp, MilpLimits, MilpStatus};

use super::{
    build_p_formulation, build_pq_formulation, relaxation_bound, var_p, var_q, var_x, var_y,
    var_z, Formulation, PoolingError, PoolingNetwork, PoolingSolution,
};

/// Proportion `q_il` of pool `l`'s content coming from input `i`.
pub type ProportionMap = BTreeMap<(String, String), f64>;

const CHECK_TOL: f64 = 1e-6;
const GRID_LIMIT: usize = 6;
const MULTISTART_CAP: usize = 64;

/// Result of a pooling heuristic. `solution` is `None` when the method
/// found no point passing both formulation checks (a declared failure).
#[derive(Debug, Clone, PartialEq)]
pub struct HeuristicOutcome {
    pub solution: Option<PoolingSolution>,
    /// McCormick bound of the path/proportion formulation.
    pub bound: Option<f64>,
    pub certificate: Option<ApproximationCertificate>,
}

impl HeuristicOutcome {
    fn new(solution: Option<PoolingSolution>, bound: Option<f64>) -> Self {
        let certificate = match (&solution, bound) {
            (Some(s), Some(b)) => Some(make_certificate(ObjectiveSense::Minimize, s.objective, b)),
            _ => None,
        };
        HeuristicOutcome { solution, bound, certificate }
    }
}

/// Builds the solution for given proportions and flows, keeping it only if
/// it passes both formulations at `CHECK_TOL`.
fn verified(
    net: &PoolingNetwork,
    q: &ProportionMap,
    y: &BTreeMap<(String, String), f64>,
    z: &BTreeMap<(String, String), f64>,
) -> Option<PoolingSolution> {
    let sol = PoolingSolution::from_proportions(net, q, y, z);
    let p_ok = sol.check_p(net, CHECK_TOL).ok()?.is_feasible();
    let pq_ok = sol.check_pq(net, CHECK_TOL).ok()??.is_feasible();
    (p_ok && pq_ok).then_some(sol)
}

fn flows(net: &PoolingNetwork, a: &Assignment) -> (BTreeMap<(String, String), f64>, BTreeMap<(String, String), f64>) {
    let clean = |v: f64| if v.abs() < 1e-12 { 0.0 } else { v };
    let y = net
        .arcs
        .y
        .iter()
        .map(|(l, j)| ((l.clone(), j.clone()), clean(a.get(&var_y(l, j)).unwrap_or(0.0)).max(0.0)))
        .collect();
    let z = net
        .arcs
        .z
        .iter()
        .map(|(i, j)| ((i.clone(), j.clone()), clean(a.get(&var_z(i, j)).unwrap_or(0.0)).max(0.0)))
        .collect();
    (y, z)
}

fn q_assignment(q: &ProportionMap) -> Assignment {
    q.iter().map(|((i, l), v)| (var_q(i, l), *v)).collect()
}

/// LP in flows for fixed proportions.
fn solve_fixed_q(net: &PoolingNetwork, pq: &BilinearModel, q: &ProportionMap) -> Option<PoolingSolution> {
    let lp = pq.fix(&q_assignment(q)).ok()?.into_linear().ok()?;
    let out = solve_lp(&lp);
    let primal = out.primal?;
    let (y, z) = flows(net, &primal);
    verified(net, q, &y, &z)
}

/// Pool qualities implied by proportions.
fn qualities(net: &PoolingNetwork, q: &ProportionMap) -> Assignment {
    let mut a = Assignment::new();
    for l in &net.pools {
        for k in net.attributes() {
            let v: f64 = net
                .feeders(&l.id)
                .iter()
                .map(|i| q.get(&(i.to_string(), l.id.clone())).copied().unwrap_or(0.0) * net.quality(i, &k))
                .sum();
            a.set(var_p(&l.id, &k), v);
        }
    }
    a
}

/// LP in flows for fixed pool qualities; returns the proportions implied by
/// its pool inflows (pools left idle keep `q`).
fn solve_fixed_p(net: &PoolingNetwork, p: &BilinearModel, q: &ProportionMap) -> Option<ProportionMap> {
    let fixed = qualities(net, q);
    let mut clamped = Assignment::new();
    for (id, &v) in fixed.iter() {
        let def = p.base().variable(id)?;
        clamped.set(id.clone(), v.clamp(def.lower, def.upper));
    }
    let lp = p.fix(&clamped).ok()?.into_linear().ok()?;
    let primal = solve_lp(&lp).primal?;
    let mut next = q.clone();
    for l in &net.pools {
        let feeders = net.feeders(&l.id);
        let inflow: Vec<f64> = feeders.iter().map(|i| primal.get(&var_x(i, &l.id)).unwrap_or(0.0).max(0.0)).collect();
        let total: f64 = inflow.iter().sum();
        if total > 1e-9 {
            for (i, f) in feeders.iter().zip(inflow) {
                next.insert((i.to_string(), l.id.clone()), f / total);
            }
        }
    }
    Some(next)
}

fn better(candidate: &Option<PoolingSolution>, best: &Option<PoolingSolution>) -> bool {
    match (candidate, best) {
        (Some(c), Some(b)) => c.objective < b.objective - 1e-9,
        (Some(_), None) => true,
        _ => false,
    }
}

fn alternate(
    net: &PoolingNetwork,
    pq: &BilinearModel,
    p: &BilinearModel,
    start: &ProportionMap,
    max_iters: usize,
) -> Option<PoolingSolution> {
    let mut q = start.clone();
    let mut best: Option<PoolingSolution> = None;
    for _ in 0..max_iters.max(1) {
        let before = best.as_ref().map(|s| s.objective);
        let cand = solve_fixed_q(net, pq, &q);
        if better(&cand, &best) {
            best = cand;
        }
        if net.pools.is_empty() {
            break;
        }
        let Some(next) = solve_fixed_p(net, p, &q) else { break };
        let cand = solve_fixed_q(net, pq, &next);
        if better(&cand, &best) {
            best = cand;
        }
        let moved = next.iter().any(|(k, v)| (q.get(k).copied().unwrap_or(0.0) - v).abs() > 1e-9);
        let improved = match (before, best.as_ref()) {
            (Some(b), Some(s)) => s.objective < b - 1e-9,
            (None, Some(_)) => true,
            _ => false,
        };
        q = next;
        if !moved || (!improved && before.is_some()) {
            break;
        }
    }
    best
}

fn check_start(net: &PoolingNetwork, start: &ProportionMap) -> Result<(), PoolingError> {
    for l in &net.pools {
        let feeders = net.feeders(&l.id);
        if feeders.is_empty() {
            continue;
        }
        let total: f64 = feeders.iter().map(|i| start.get(&(i.to_string(), l.id.clone())).copied().unwrap_or(0.0)).sum();
        if (total - 1.0).abs() > 1e-6 {
            return Err(PoolingError::BadStart(l.id.clone()));
        }
    }
    Ok(())
}

/// Equal shares for every pool's feeders.
pub fn uniform_start(net: &PoolingNetwork) -> ProportionMap {
    let mut q = ProportionMap::new();
    for l in &net.pools {
        let feeders = net.feeders(&l.id);
        for i in &feeders {
            q.insert((i.to_string(), l.id.clone()), 1.0 / feeders.len() as f64);
        }
    }
    q
}

/// Starts where every pool is fed by a single input, in lexicographic order
/// of feeder choices, at most `cap` of them.
pub fn corner_starts(net: &PoolingNetwork, cap: usize) -> Vec<ProportionMap> {
    let choices: Vec<(String, Vec<&str>)> = net
        .pools
        .iter()
        .map(|l| (l.id.clone(), net.feeders(&l.id)))
        .filter(|(_, f)| !f.is_empty())
        .collect();
    let mut out = Vec::new();
    let mut pick = vec![0usize; choices.len()];
    loop {
        if out.len() >= cap {
            break;
        }
        let mut q = ProportionMap::new();
        for ((l, feeders), &c) in choices.iter().zip(&pick) {
            for (n, i) in feeders.iter().enumerate() {
                q.insert((i.to_string(), l.clone()), if n == c { 1.0 } else { 0.0 });
            }
        }
        out.push(q);
        // odometer increment, last pool fastest
        let mut pos = choices.len();
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            pick[pos] += 1;
            if pick[pos] < choices[pos].1.len() {
                break;
            }
            pick[pos] = 0;
        }
    }
    out
}

/// Alternates between the LP in flows for fixed proportions and the LP in
/// flows for fixed pool qualities, re-deriving proportions from the pool
/// inflows each round. Keeps the best point that passes both formulation
/// checks; the bound comes from the McCormick relaxation of the
/// path/proportion form.
pub fn alternating_heuristic(net: &PoolingNetwork, start: &ProportionMap, max_iters: usize) -> Result<HeuristicOutcome, PoolingError> {
    check_start(net, start)?;
    let pq = build_pq_formulation(net)?;
    let p = build_p_formulation(net)?;
    let bound = relaxation_bound(net, Formulation::Pq, 1)?;
    Ok(HeuristicOutcome::new(alternate(net, &pq, &p, start, max_iters), bound))
}

/// Runs [`alternating_heuristic`] from every corner start (up to 64) and
/// the uniform start; the best result wins, earlier starts winning ties.
pub fn multistart_alternating(net: &PoolingNetwork, max_iters: usize, exec: Execution) -> Result<HeuristicOutcome, PoolingError> {
    let pq = build_pq_formulation(net)?;
    let p = build_p_formulation(net)?;
    let bound = relaxation_bound(net, Formulation::Pq, 1)?;
    let mut starts = corner_starts(net, MULTISTART_CAP);
    starts.push(uniform_start(net));
    let results = map_ordered(exec, &starts, |s| alternate(net, &pq, &p, s, max_iters));
    let mut best = None;
    for r in results {
        if better(&r, &best) {
            best = r;
        }
    }
    Ok(HeuristicOutcome::new(best, bound))
}

/// All ways to write `r` as an ordered sum of `parts` nonnegative integers.
fn compositions(r: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 0 {
        return vec![vec![]];
    }
    if parts == 1 {
        return vec![vec![r]];
    }
    let mut out = Vec::new();
    for first in (0..=r).rev() {
        for mut rest in compositions(r - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Enumerates every proportion vector on the grid `{0, 1/R, ..., 1}` with
/// `sum_i q_il = 1` and solves the fixed-proportion LP for each. Limited to
/// `|I| * |L| <= 6`.
pub fn grid_oracle_pooling(net: &PoolingNetwork, resolution: usize, exec: Execution) -> Result<HeuristicOutcome, PoolingError> {
    if resolution == 0 {
        return Err(PoolingError::ZeroResolution);
    }
    let size = net.inputs.len() * net.pools.len();
    if size > GRID_LIMIT {
        return Err(PoolingError::TooLarge { limit: GRID_LIMIT, actual: size });
    }
    let pq = build_pq_formulation(net)?;
    let bound = relaxation_bound(net, Formulation::Pq, 1)?;
    let per_pool: Vec<(String, Vec<&str>, Vec<Vec<usize>>)> = net
        .pools
        .iter()
        .map(|l| {
            let f = net.feeders(&l.id);
            let c = if f.is_empty() { vec![vec![]] } else { compositions(resolution, f.len()) };
            (l.id.clone(), f, c)
        })
        .collect();
    let mut grids: Vec<ProportionMap> = vec![ProportionMap::new()];
    for (l, feeders, comps) in &per_pool {
        let mut next = Vec::with_capacity(grids.len() * comps.len());
        for g in &grids {
            for c in comps {
                let mut q = g.clone();
                for (i, &n) in feeders.iter().zip(c) {
                    q.insert((i.to_string(), l.clone()), n as f64 / resolution as f64);
                }
                next.push(q);
            }
        }
        grids = next;
    }
    let results = map_ordered(exec, &grids, |q| solve_fixed_q(net, &pq, q));
    let mut best = None;
    for r in results {
        if better(&r, &best) {
            best = r;
        }
    }
    Ok(HeuristicOutcome::new(best, bound))
}

fn bit_count(resolution: usize) -> usize {
    (usize::BITS - resolution.leading_zeros()) as usize
}

/// Restricts every proportion to the grid `{0, 1/R, ..., 1}`:
/// `R q_il = sum_b 2^b qbit_{i}_{l}_{b}` with binary digits, and each path
/// product `q_il y_lj` becomes `(1/R) sum_b 2^b u_{i}_{l}_{j}_{b}` with the
/// exact linearisation of `u = qbit * y`. Every feasible point is feasible
/// for the path/proportion formulation, so the optimum is an upper bound.
pub fn discretize_proportions(net: &PoolingNetwork, resolution: usize) -> Result<LinearModel, PoolingError> {
    if resolution == 0 {
        return Err(PoolingError::ZeroResolution);
    }
    let pq = build_pq_formulation(net)?;
    let base = pq.base();
    let bits = bit_count(resolution);
    let r = resolution as f64;
    let mut m = LinearModel::new(base.sense());
    for v in base.variables() {
        m.add_variable(v.clone())?;
    }
    m.set_objective(base.objective().clone())?;
    let bit_name = |q: &str, b: usize| format!("{q}_bit{b}");
    for (i, l) in &net.arcs.x {
        let q = var_q(i, l);
        let mut grid = LinearExpression::from_terms([(q.as_str(), r)]);
        let mut count = LinearExpression::new();
        for b in 0..bits {
            let name = bit_name(&q, b);
            m.add_variable(VariableDef::binary(&name))?;
            grid.add_term(&name, -((1u64 << b) as f64));
            count.add_term(&name, (1u64 << b) as f64);
        }
        m.add_constraint(format!("qgrid_{i}_{l}"), grid, RowSense::Eq, 0.0)?;
        m.add_constraint(format!("qcount_{i}_{l}"), count, RowSense::Le, r)?;
    }
    for c in base.constraints() {
        let mut e = c.expr.clone();
        for t in pq.products(&c.label) {
            // path rows hold -q*y
            let ybar = base.variable(&t.b).map_or(0.0, |v| v.upper);
            for b in 0..bits {
                let bit = bit_name(&t.a, b);
                let u = format!("u_{}_{}_{b}", t.a, t.b);
                m.add_variable(VariableDef::continuous(&u, 0.0, ybar))?;
                m.add_constraint(
                    format!("{u}_on"),
                    LinearExpression::from_terms([(u.as_str(), 1.0), (bit.as_str(), -ybar)]),
                    RowSense::Le,
                    0.0,
                )?;
                m.add_constraint(
                    format!("{u}_cap"),
                    LinearExpression::from_terms([(u.as_str(), 1.0), (t.b.as_str(), -1.0)]),
                    RowSense::Le,
                    0.0,
                )?;
                m.add_constraint(
                    format!("{u}_floor"),
                    LinearExpression::from_terms([(u.as_str(), 1.0), (t.b.as_str(), -1.0), (bit.as_str(), -ybar)]),
                    RowSense::Ge,
                    -ybar,
                )?;
                e.add_term(&u, t.coefficient * (1u64 << b) as f64 / r);
            }
        }
        m.add_constraint(c.label.clone(), e, c.sense, c.rhs)?;
    }
    Ok(m)
}

/// Solves the discretized MILP and maps its point back to a checked
/// pooling solution (proportions from the binary digits, flows from the
/// MILP, path flows recomputed as `q * y`).
pub fn solve_discretized(net: &PoolingNetwork, resolution: usize, limits: &MilpLimits) -> Result<HeuristicOutcome, PoolingError> {
    let model = discretize_proportions(net, resolution)?;
    let bound = relaxation_bound(net, Formulation::Pq, 1)?;
    let out = solve_milp(&model, limits);
    let solution = match (out.status, out.primal) {
        (MilpStatus::Optimal | MilpStatus::FeasibleLimit, Some(a)) => {
            let bits = bit_count(resolution);
            let mut q = ProportionMap::new();
            for (i, l) in &net.arcs.x {
                let name = var_q(i, l);
                let n: f64 = (0..bits)
                    .map(|b| a.get(&format!("{name}_bit{b}")).unwrap_or(0.0).round() * (1u64 << b) as f64)
                    .sum();
                q.insert((i.clone(), l.clone()), n / resolution as f64);
            }
            let (y, z) = flows(net, &a);
            verified(net, &q, &y, &z)
        }
        _ => None,
    };
    Ok(HeuristicOutcome::new(solution, bound))
}
