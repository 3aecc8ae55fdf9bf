//! Pooling networks: inputs blend through pools into outputs under linear
//! blending quality specifications.
//!
//! Two bilinear formulations are built on [`crate::model`]: the flow/quality
//! form ([`build_p_formulation`]) and the path/proportion form
//! ([`build_pq_formulation`]). Relaxations, heuristics, a grid oracle and the
//! complexity classifier live in the submodules.

mod classify;
mod formulation;
mod heuristics;
mod relax;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{check_feasibility, Assignment, FeasibilityReport, ModelError};

pub use classify::{classify_pooling_instance, Classification, ComplexityClass, DEFAULT_KAPPA};
pub use formulation::{build_p_formulation, build_pq_formulation, FlowBounds};
pub use heuristics::{
    alternating_heuristic, discretize_proportions, grid_oracle_pooling, multistart_alternating,
    solve_discretized, HeuristicOutcome, ProportionMap,
};
pub use relax::{piecewise_mccormick_relax, relaxation_bound, Formulation};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PoolingError {
    #[error("invalid pooling network: {}", .0.join("; "))]
    InvalidNetwork(Vec<String>),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("grid oracle limited to |I|*|L| <= {limit}, network has {actual}")]
    TooLarge { limit: usize, actual: usize },
    #[error("resolution and piece counts must be at least 1")]
    ZeroResolution,
    #[error("starting proportions for pool `{0}` do not sum to one")]
    BadStart(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Input {
    pub id: String,
    pub cost: f64,
    #[serde(with = "crate::io::inf::pair")]
    pub supply: (f64, f64),
    #[serde(default)]
    pub quality: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pool {
    pub id: String,
    #[serde(with = "crate::io::inf")]
    pub capacity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Output {
    pub id: String,
    pub profit: f64,
    #[serde(with = "crate::io::inf::pair")]
    pub demand: (f64, f64),
    #[serde(default, with = "crate::io::inf::pair_map")]
    pub quality_bounds: BTreeMap<String, (f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Arcs {
    #[serde(default)]
    pub x: Vec<(String, String)>,
    #[serde(default)]
    pub y: Vec<(String, String)>,
    #[serde(default)]
    pub z: Vec<(String, String)>,
}

/// Input, pool and output nodes plus the three arc families
/// (input-pool, pool-output and input-output bypass).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolingNetwork {
    pub inputs: Vec<Input>,
    #[serde(default)]
    pub pools: Vec<Pool>,
    pub outputs: Vec<Output>,
    pub arcs: Arcs,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct NetworkReport {
    pub errors: Vec<String>,
    /// Pools lacking an inlet or an outlet.
    pub degenerate_pools: Vec<String>,
    pub notes: Vec<String>,
}

impl NetworkReport {
    pub fn is_valid(&self) -> bool {
        self.errors.is_empty()
    }
}

impl PoolingNetwork {
    /// Attribute names used anywhere in the network, sorted.
    pub fn attributes(&self) -> Vec<String> {
        let mut k: BTreeSet<&String> = BTreeSet::new();
        for i in &self.inputs {
            k.extend(i.quality.keys());
        }
        for j in &self.outputs {
            k.extend(j.quality_bounds.keys());
        }
        k.into_iter().cloned().collect()
    }

    pub fn input(&self, id: &str) -> Option<&Input> {
        self.inputs.iter().find(|i| i.id == id)
    }

    pub fn pool(&self, id: &str) -> Option<&Pool> {
        self.pools.iter().find(|l| l.id == id)
    }

    pub fn output(&self, id: &str) -> Option<&Output> {
        self.outputs.iter().find(|j| j.id == id)
    }

    /// Inputs feeding pool `l`, in arc order.
    pub fn feeders(&self, l: &str) -> Vec<&str> {
        self.arcs.x.iter().filter(|(_, p)| p == l).map(|(i, _)| i.as_str()).collect()
    }

    /// Outputs served by pool `l`, in arc order.
    pub fn outlets(&self, l: &str) -> Vec<&str> {
        self.arcs.y.iter().filter(|(p, _)| p == l).map(|(_, j)| j.as_str()).collect()
    }

    pub fn quality(&self, input: &str, k: &str) -> f64 {
        self.input(input).and_then(|i| i.quality.get(k).copied()).unwrap_or(0.0)
    }

    /// Quality window of output `j` for attribute `k`; `[0, inf)` if unset.
    pub fn quality_bounds(&self, j: &str, k: &str) -> (f64, f64) {
        self.output(j)
            .and_then(|o| o.quality_bounds.get(k).copied())
            .unwrap_or((0.0, f64::INFINITY))
    }

    pub fn out_degree_input(&self, i: &str) -> usize {
        self.arcs.x.iter().filter(|(a, _)| a == i).count() + self.arcs.z.iter().filter(|(a, _)| a == i).count()
    }

    pub fn out_degree_pool(&self, l: &str) -> usize {
        self.outlets(l).len()
    }

    pub fn in_degree_pool(&self, l: &str) -> usize {
        self.feeders(l).len()
    }

    pub fn in_degree_output(&self, j: &str) -> usize {
        self.arcs.y.iter().filter(|(_, b)| b == j).count() + self.arcs.z.iter().filter(|(_, b)| b == j).count()
    }

    /// True when no output restricts any attribute.
    pub fn has_quality_constraints(&self) -> bool {
        self.outputs
            .iter()
            .any(|o| o.quality_bounds.values().any(|&(lo, hi)| lo > 0.0 || hi.is_finite()))
    }
}

/// Structural checks: arc endpoints, identifiers, bound ordering and
/// attribute completeness. Pools without an inlet or outlet are reported
/// as degenerate rather than rejected.
pub fn validate_network(net: &PoolingNetwork) -> NetworkReport {
    let mut r = NetworkReport::default();
    let mut seen = BTreeSet::new();
    let ids = net
        .inputs
        .iter()
        .map(|i| &i.id)
        .chain(net.pools.iter().map(|l| &l.id))
        .chain(net.outputs.iter().map(|j| &j.id));
    for id in ids {
        if !seen.insert(id.as_str()) {
            r.errors.push(format!("node id `{id}` is used twice"));
        }
    }
    let is_input = |id: &str| net.input(id).is_some();
    let is_pool = |id: &str| net.pool(id).is_some();
    let is_output = |id: &str| net.output(id).is_some();
    let families: [(&str, &Vec<(String, String)>, &dyn Fn(&str) -> bool, &str, &dyn Fn(&str) -> bool, &str); 3] = [
        ("x", &net.arcs.x, &is_input, "input", &is_pool, "pool"),
        ("y", &net.arcs.y, &is_pool, "pool", &is_output, "output"),
        ("z", &net.arcs.z, &is_input, "input", &is_output, "output"),
    ];
    for (name, arcs, tail_ok, tail_kind, head_ok, head_kind) in families {
        let mut dup = BTreeSet::new();
        for (a, b) in arcs {
            if !tail_ok(a) {
                r.errors.push(format!("arc {name} ({a}, {b}): `{a}` is not an {tail_kind}"));
            }
            if !head_ok(b) {
                r.errors.push(format!("arc {name} ({a}, {b}): `{b}` is not a {head_kind}"));
            }
            if !dup.insert((a, b)) {
                r.errors.push(format!("arc {name} ({a}, {b}) is listed twice"));
            }
        }
    }
    let attrs = net.attributes();
    for i in &net.inputs {
        if !(i.supply.0 <= i.supply.1) || i.supply.0 < 0.0 {
            r.errors.push(format!("input `{}` supply bounds [{}, {}] are invalid", i.id, i.supply.0, i.supply.1));
        }
        for k in &attrs {
            match i.quality.get(k) {
                None => r.errors.push(format!("input `{}` has no value for attribute `{k}`", i.id)),
                Some(&c) if !(c >= 0.0) || !c.is_finite() => {
                    r.errors.push(format!("input `{}` attribute `{k}` must be finite and nonnegative", i.id))
                }
                _ => {}
            }
        }
    }
    for l in &net.pools {
        if !(l.capacity >= 0.0) {
            r.errors.push(format!("pool `{}` capacity {} is negative", l.id, l.capacity));
        }
        if net.feeders(&l.id).is_empty() || net.outlets(&l.id).is_empty() {
            r.degenerate_pools.push(l.id.clone());
        }
    }
    for j in &net.outputs {
        if !(j.demand.0 <= j.demand.1) || j.demand.0 < 0.0 {
            r.errors.push(format!("output `{}` demand bounds [{}, {}] are invalid", j.id, j.demand.0, j.demand.1));
        }
        for (k, &(lo, hi)) in &j.quality_bounds {
            if !(lo <= hi) {
                r.errors.push(format!("output `{}` attribute `{k}` window [{lo}, {hi}] is inverted", j.id));
            }
        }
    }
    if net.pools.is_empty() {
        r.notes.push("no pools: the instance is a blending problem".into());
    }
    r
}

/// Flows, pool qualities and (optionally) proportions of a pooling solution.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PoolingSolution {
    pub x: BTreeMap<(String, String), f64>,
    pub y: BTreeMap<(String, String), f64>,
    pub z: BTreeMap<(String, String), f64>,
    /// Keyed by (pool, attribute).
    pub p: BTreeMap<(String, String), f64>,
    pub q: Option<BTreeMap<(String, String), f64>>,
    /// Keyed by (input, pool, output).
    pub v: Option<BTreeMap<(String, String, String), f64>>,
    pub objective: f64,
}

pub(crate) fn var_x(i: &str, l: &str) -> String {
    format!("x_{i}_{l}")
}
pub(crate) fn var_y(l: &str, j: &str) -> String {
    format!("y_{l}_{j}")
}
pub(crate) fn var_z(i: &str, j: &str) -> String {
    format!("z_{i}_{j}")
}
pub(crate) fn var_p(l: &str, k: &str) -> String {
    format!("p_{l}_{k}")
}
pub(crate) fn var_q(i: &str, l: &str) -> String {
    format!("q_{i}_{l}")
}
pub(crate) fn var_v(i: &str, l: &str, j: &str) -> String {
    format!("v_{i}_{l}_{j}")
}

fn pair(a: &str, b: &str) -> (String, String) {
    (a.to_string(), b.to_string())
}

impl PoolingSolution {
    /// Objective of the flows: input costs minus output revenues.
    pub fn cost(net: &PoolingNetwork, sol: &PoolingSolution) -> f64 {
        let c = |i: &str| net.input(i).map_or(0.0, |n| n.cost);
        let d = |j: &str| net.output(j).map_or(0.0, |n| n.profit);
        let mut v = 0.0;
        for ((i, _), f) in &sol.x {
            v += c(i) * f;
        }
        for ((_, j), f) in &sol.y {
            v -= d(j) * f;
        }
        for ((i, j), f) in &sol.z {
            v -= (d(j) - c(i)) * f;
        }
        v
    }

    /// Builds a solution from proportions and path-form flows; x, p and
    /// v are derived so that every product relation holds exactly.
    pub fn from_proportions(
        net: &PoolingNetwork,
        q: &BTreeMap<(String, String), f64>,
        y: &BTreeMap<(String, String), f64>,
        z: &BTreeMap<(String, String), f64>,
    ) -> PoolingSolution {
        let mut sol = PoolingSolution { y: y.clone(), z: z.clone(), ..Default::default() };
        let mut v = BTreeMap::new();
        for (i, l) in &net.arcs.x {
            let share = q.get(&pair(i, l)).copied().unwrap_or(0.0);
            let mut x = 0.0;
            for j in net.outlets(l) {
                let flow = share * y.get(&pair(l, j)).copied().unwrap_or(0.0);
                v.insert((i.clone(), l.clone(), j.to_string()), flow);
                x += flow;
            }
            sol.x.insert(pair(i, l), x);
        }
        for l in &net.pools {
            for k in net.attributes() {
                let p: f64 = net
                    .feeders(&l.id)
                    .iter()
                    .map(|i| q.get(&pair(i, &l.id)).copied().unwrap_or(0.0) * net.quality(i, &k))
                    .sum();
                sol.p.insert(pair(&l.id, &k), p);
            }
        }
        sol.q = Some(q.clone());
        sol.v = Some(v);
        sol.objective = PoolingSolution::cost(net, &sol);
        sol
    }

    /// Values for every variable of [`build_p_formulation`].
    pub fn p_assignment(&self, net: &PoolingNetwork) -> Assignment {
        let mut a = Assignment::new();
        for (i, l) in &net.arcs.x {
            a.set(var_x(i, l), self.x.get(&pair(i, l)).copied().unwrap_or(0.0));
        }
        for (l, j) in &net.arcs.y {
            a.set(var_y(l, j), self.y.get(&pair(l, j)).copied().unwrap_or(0.0));
        }
        for (i, j) in &net.arcs.z {
            a.set(var_z(i, j), self.z.get(&pair(i, j)).copied().unwrap_or(0.0));
        }
        for l in &net.pools {
            for k in net.attributes() {
                a.set(var_p(&l.id, &k), self.p.get(&pair(&l.id, &k)).copied().unwrap_or(0.0));
            }
        }
        a
    }

    /// Values for every variable of [`build_pq_formulation`]; `None` when
    /// the solution carries no proportions.
    pub fn pq_assignment(&self, net: &PoolingNetwork) -> Option<Assignment> {
        let q = self.q.as_ref()?;
        let v = self.v.as_ref()?;
        let mut a = Assignment::new();
        for (i, l) in &net.arcs.x {
            a.set(var_q(i, l), q.get(&pair(i, l)).copied().unwrap_or(0.0));
            for j in net.outlets(l) {
                let key = (i.clone(), l.clone(), j.to_string());
                a.set(var_v(i, l, j), v.get(&key).copied().unwrap_or(0.0));
            }
        }
        for (l, j) in &net.arcs.y {
            a.set(var_y(l, j), self.y.get(&pair(l, j)).copied().unwrap_or(0.0));
        }
        for (i, j) in &net.arcs.z {
            a.set(var_z(i, j), self.z.get(&pair(i, j)).copied().unwrap_or(0.0));
        }
        Some(a)
    }

    /// Checks the solution against the flow/quality formulation.
    pub fn check_p(&self, net: &PoolingNetwork, tol: f64) -> Result<FeasibilityReport, PoolingError> {
        let model = build_p_formulation(net)?;
        Ok(check_feasibility(&model, &self.p_assignment(net), tol)?)
    }

    /// Checks the solution against the path/proportion formulation.
    pub fn check_pq(&self, net: &PoolingNetwork, tol: f64) -> Result<Option<FeasibilityReport>, PoolingError> {
        let Some(a) = self.pq_assignment(net) else { return Ok(None) };
        let model = build_pq_formulation(net)?;
        Ok(Some(check_feasibility(&model, &a, tol)?))
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn blending_network_is_valid_without_pools() {
        let r = validate_network(&blending());
        assert!(r.is_valid(), "{r:?}");
        assert_eq!(r.notes.len(), 1);
    }

    #[test]
    fn misplaced_arc_is_reported() {
        let mut net = blending();
        net.arcs.x.push(("a".into(), "o".into()));
        let r = validate_network(&net);
        assert!(!r.is_valid());
        assert!(r.errors[0].contains("not a pool"));
    }

    #[test]
    fn haverly_is_valid() {
        let r = validate_network(&haverly());
        assert!(r.is_valid() && r.degenerate_pools.is_empty(), "{r:?}");
    }

    #[test]
    fn degenerate_pool_is_flagged() {
        let mut net = haverly();
        net.pools.push(Pool { id: "idle".into(), capacity: 10.0 });
        let r = validate_network(&net);
        assert!(r.is_valid());
        assert_eq!(r.degenerate_pools, vec!["idle".to_string()]);
    }

    #[test]
    fn missing_attribute_is_an_error() {
        let mut net = haverly();
        net.inputs[0].quality.clear();
        assert!(!validate_network(&net).is_valid());
    }
}
