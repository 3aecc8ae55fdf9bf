use std::collections::BTreeMap;

use crate::model::{
    BilinearModel, BilinearTerm, LinearExpression, LinearModel, ObjectiveSense, RowSense,
    VariableDef,
};

use super::{
    validate_network, var_p, var_q, var_v, var_x, var_y, var_z, PoolingError, PoolingNetwork,
};

/// Upper bounds on arc flows implied by supplies, capacities and demands.
/// They are valid for every feasible point, so tightening variable bounds
/// with them leaves the feasible set unchanged while giving the relaxations
/// finite boxes to work with.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowBounds {
    pub x: BTreeMap<(String, String), f64>,
    pub y: BTreeMap<(String, String), f64>,
    pub z: BTreeMap<(String, String), f64>,
}

impl FlowBounds {
    pub fn new(net: &PoolingNetwork) -> Self {
        let supply = |i: &str| net.input(i).map_or(0.0, |n| n.supply.1);
        let cap = |l: &str| net.pool(l).map_or(0.0, |n| n.capacity);
        let demand = |j: &str| net.output(j).map_or(0.0, |n| n.demand.1);
        let mut x = BTreeMap::new();
        for (i, l) in &net.arcs.x {
            x.insert((i.clone(), l.clone()), supply(i).min(cap(l)));
        }
        let mut y = BTreeMap::new();
        for (l, j) in &net.arcs.y {
            let inflow: f64 = net.feeders(l).iter().map(|i| x[&(i.to_string(), l.clone())]).sum();
            y.insert((l.clone(), j.clone()), cap(l).min(demand(j)).min(inflow));
        }
        let mut z = BTreeMap::new();
        for (i, j) in &net.arcs.z {
            z.insert((i.clone(), j.clone()), supply(i).min(demand(j)));
        }
        FlowBounds { x, y, z }
    }
}

fn require_valid(net: &PoolingNetwork) -> Result<(), PoolingError> {
    let report = validate_network(net);
    if !report.is_valid() {
        return Err(PoolingError::InvalidNetwork(report.errors));
    }
    Ok(())
}

fn supply_and_demand_rows(
    net: &PoolingNetwork,
    m: &mut LinearModel,
    supply_terms: &BTreeMap<&str, LinearExpression>,
    demand_terms: &BTreeMap<&str, LinearExpression>,
) -> Result<(), PoolingError> {
    for i in &net.inputs {
        let e = supply_terms.get(i.id.as_str()).cloned().unwrap_or_default();
        if i.supply.0 > 0.0 {
            m.add_constraint(format!("supply_lo_{}", i.id), e.clone(), RowSense::Ge, i.supply.0)?;
        }
        if i.supply.1.is_finite() {
            m.add_constraint(format!("supply_hi_{}", i.id), e, RowSense::Le, i.supply.1)?;
        }
    }
    for j in &net.outputs {
        let e = demand_terms.get(j.id.as_str()).cloned().unwrap_or_default();
        if j.demand.0 > 0.0 {
            m.add_constraint(format!("demand_lo_{}", j.id), e.clone(), RowSense::Ge, j.demand.0)?;
        }
        if j.demand.1.is_finite() {
            m.add_constraint(format!("demand_hi_{}", j.id), e, RowSense::Le, j.demand.1)?;
        }
    }
    Ok(())
}

/// Flow/quality formulation: arc flows `x`, `y`, `z` and pool qualities
/// `p`, with bilinear blending rows `sum_i C_ik x_il = p_lk sum_j y_lj` and
/// output quality rows. Minimises input cost minus output revenue.
///
/// Row labels: `supply_lo_*`, `supply_hi_*`, `capacity_*`, `demand_lo_*`,
/// `demand_hi_*`, `conserve_*`, `blend_{l}_{k}`, `quality_lo_{j}_{k}`,
/// `quality_hi_{j}_{k}`. Lower quality rows are emitted only for positive
/// lower limits and upper rows only for finite upper limits.
pub fn build_p_formulation(net: &PoolingNetwork) -> Result<BilinearModel, PoolingError> {
    require_valid(net)?;
    let attrs = net.attributes();
    let bounds = FlowBounds::new(net);
    let cost = |i: &str| net.input(i).map_or(0.0, |n| n.cost);
    let profit = |j: &str| net.output(j).map_or(0.0, |n| n.profit);

    let mut m = LinearModel::new(ObjectiveSense::Minimize);
    let mut obj = LinearExpression::new();
    let mut supply: BTreeMap<&str, LinearExpression> = BTreeMap::new();
    let mut demand: BTreeMap<&str, LinearExpression> = BTreeMap::new();
    for (i, l) in &net.arcs.x {
        let id = var_x(i, l);
        m.add_variable(VariableDef::continuous(&id, 0.0, bounds.x[&(i.clone(), l.clone())]))?;
        obj.add_term(&id, cost(i));
        supply.entry(i).or_default().add_term(&id, 1.0);
    }
    for (l, j) in &net.arcs.y {
        let id = var_y(l, j);
        m.add_variable(VariableDef::continuous(&id, 0.0, bounds.y[&(l.clone(), j.clone())]))?;
        obj.add_term(&id, -profit(j));
        demand.entry(j).or_default().add_term(&id, 1.0);
    }
    for (i, j) in &net.arcs.z {
        let id = var_z(i, j);
        m.add_variable(VariableDef::continuous(&id, 0.0, bounds.z[&(i.clone(), j.clone())]))?;
        obj.add_term(&id, -(profit(j) - cost(i)));
        supply.entry(i).or_default().add_term(&id, 1.0);
        demand.entry(j).or_default().add_term(&id, 1.0);
    }
    for l in &net.pools {
        let feeders = net.feeders(&l.id);
        for k in &attrs {
            let (lo, hi) = feeders
                .iter()
                .map(|i| net.quality(i, k))
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), c| (a.min(c), b.max(c)));
            let (lo, hi) = if feeders.is_empty() { (0.0, 0.0) } else { (lo, hi) };
            m.add_variable(VariableDef::continuous(var_p(&l.id, k), lo, hi))?;
        }
    }
    m.set_objective(obj)?;
    supply_and_demand_rows(net, &mut m, &supply, &demand)?;

    let mut bm = BilinearModel::new(m);
    for l in &net.pools {
        let outflow = LinearExpression::from_terms(net.outlets(&l.id).iter().map(|j| (var_y(&l.id, j), 1.0)));
        if l.capacity.is_finite() {
            bm.base_mut().add_constraint(format!("capacity_{}", l.id), outflow.clone(), RowSense::Le, l.capacity)?;
        }
        let mut conserve = LinearExpression::from_terms(net.feeders(&l.id).iter().map(|i| (var_x(i, &l.id), 1.0)));
        conserve.add_expr(&outflow, -1.0);
        bm.base_mut().add_constraint(format!("conserve_{}", l.id), conserve, RowSense::Eq, 0.0)?;
        for k in &attrs {
            let blend = LinearExpression::from_terms(
                net.feeders(&l.id).iter().map(|i| (var_x(i, &l.id), net.quality(i, k))),
            );
            let products = net
                .outlets(&l.id)
                .iter()
                .map(|j| BilinearTerm::new(var_p(&l.id, k), var_y(&l.id, j), -1.0))
                .collect();
            bm.add_row(format!("blend_{}_{}", l.id, k), blend, products, RowSense::Eq, 0.0)?;
        }
    }
    for j in &net.outputs {
        for k in &attrs {
            let (plo, phi) = net.quality_bounds(&j.id, k);
            let pools: Vec<&str> = net.arcs.y.iter().filter(|(_, b)| *b == j.id).map(|(l, _)| l.as_str()).collect();
            let bypass: Vec<&str> = net.arcs.z.iter().filter(|(_, b)| *b == j.id).map(|(i, _)| i.as_str()).collect();
            let row = |limit: f64| {
                let mut e = LinearExpression::new();
                for l in &pools {
                    e.add_term(&var_y(l, &j.id), -limit);
                }
                for i in &bypass {
                    e.add_term(&var_z(i, &j.id), net.quality(i, k) - limit);
                }
                let products: Vec<BilinearTerm> =
                    pools.iter().map(|l| BilinearTerm::new(var_p(l, k), var_y(l, &j.id), 1.0)).collect();
                (e, products)
            };
            if plo > 0.0 {
                let (e, products) = row(plo);
                bm.add_row(format!("quality_lo_{}_{}", j.id, k), e, products, RowSense::Ge, 0.0)?;
            }
            if phi.is_finite() {
                let (e, products) = row(phi);
                bm.add_row(format!("quality_hi_{}_{}", j.id, k), e, products, RowSense::Le, 0.0)?;
            }
        }
    }
    Ok(bm)
}

/// Path/proportion formulation over `q`, `v`, `y`, `z` with the bilinear
/// path rows `v_ilj = q_il y_lj`, strengthened by two families of
/// reformulation-linearisation rows:
///
/// * `rlt_cap_{i}_{l}`: `sum_j v_ilj <= S_l q_il` (capacity times `q_il`),
///   emitted for finite capacities;
/// * `rlt_ub_{i}_{l}_{j}`: `v_ilj <= ybar_lj q_il` (the upper bound of
///   `y_lj` times `q_il`).
///
/// Multiplying `sum_i q_il = 1` by `y_lj` gives the output rows
/// `sum_i v_ilj = y_lj`, which are part of the base formulation already.
pub fn build_pq_formulation(net: &PoolingNetwork) -> Result<BilinearModel, PoolingError> {
    require_valid(net)?;
    let attrs = net.attributes();
    let bounds = FlowBounds::new(net);
    let cost = |i: &str| net.input(i).map_or(0.0, |n| n.cost);
    let profit = |j: &str| net.output(j).map_or(0.0, |n| n.profit);

    let mut m = LinearModel::new(ObjectiveSense::Minimize);
    let mut obj = LinearExpression::new();
    let mut supply: BTreeMap<&str, LinearExpression> = BTreeMap::new();
    let mut demand: BTreeMap<&str, LinearExpression> = BTreeMap::new();
    for (i, l) in &net.arcs.x {
        m.add_variable(VariableDef::continuous(var_q(i, l), 0.0, 1.0))?;
        for j in net.outlets(l) {
            let id = var_v(i, l, j);
            let ub = bounds.y[&(l.clone(), j.to_string())].min(bounds.x[&(i.clone(), l.clone())]);
            m.add_variable(VariableDef::continuous(&id, 0.0, ub))?;
            obj.add_term(&id, cost(i) - profit(j));
            supply.entry(i).or_default().add_term(&id, 1.0);
            demand.entry(j).or_default().add_term(&id, 1.0);
        }
    }
    for (l, j) in &net.arcs.y {
        m.add_variable(VariableDef::continuous(var_y(l, j), 0.0, bounds.y[&(l.clone(), j.clone())]))?;
    }
    for (i, j) in &net.arcs.z {
        let id = var_z(i, j);
        m.add_variable(VariableDef::continuous(&id, 0.0, bounds.z[&(i.clone(), j.clone())]))?;
        obj.add_term(&id, cost(i) - profit(j));
        supply.entry(i).or_default().add_term(&id, 1.0);
        demand.entry(j).or_default().add_term(&id, 1.0);
    }
    m.set_objective(obj)?;
    supply_and_demand_rows(net, &mut m, &supply, &demand)?;

    let mut bm = BilinearModel::new(m);
    for l in &net.pools {
        let feeders = net.feeders(&l.id);
        let outlets = net.outlets(&l.id);
        if l.capacity.is_finite() {
            let e = LinearExpression::from_terms(
                feeders.iter().flat_map(|i| outlets.iter().map(move |j| (var_v(i, &l.id, j), 1.0))),
            );
            bm.base_mut().add_constraint(format!("capacity_{}", l.id), e, RowSense::Le, l.capacity)?;
        }
        for i in &feeders {
            for j in &outlets {
                bm.add_row(
                    format!("path_{}_{}_{}", i, l.id, j),
                    LinearExpression::from_terms([(var_v(i, &l.id, j), 1.0)]),
                    vec![BilinearTerm::new(var_q(i, &l.id), var_y(&l.id, j), -1.0)],
                    RowSense::Eq,
                    0.0,
                )?;
            }
        }
        if !feeders.is_empty() {
            let e = LinearExpression::from_terms(feeders.iter().map(|i| (var_q(i, &l.id), 1.0)));
            bm.base_mut().add_constraint(format!("fractions_{}", l.id), e, RowSense::Eq, 1.0)?;
        }
        for j in &outlets {
            let mut e = LinearExpression::from_terms(feeders.iter().map(|i| (var_v(i, &l.id, j), 1.0)));
            e.add_term(&var_y(&l.id, j), -1.0);
            bm.base_mut().add_constraint(format!("output_{}_{}", l.id, j), e, RowSense::Eq, 0.0)?;
        }
        for i in &feeders {
            if l.capacity.is_finite() {
                let mut e = LinearExpression::from_terms(outlets.iter().map(|j| (var_v(i, &l.id, j), 1.0)));
                e.add_term(&var_q(i, &l.id), -l.capacity);
                bm.base_mut().add_constraint(format!("rlt_cap_{}_{}", i, l.id), e, RowSense::Le, 0.0)?;
            }
            for j in &outlets {
                let ybar = bounds.y[&(l.id.clone(), j.to_string())];
                let e = LinearExpression::from_terms([(var_v(i, &l.id, j), 1.0), (var_q(i, &l.id), -ybar)]);
                bm.base_mut().add_constraint(format!("rlt_ub_{}_{}_{}", i, l.id, j), e, RowSense::Le, 0.0)?;
            }
        }
    }
    for j in &net.outputs {
        for k in &attrs {
            let (plo, phi) = net.quality_bounds(&j.id, k);
            let row = |limit: f64| {
                let mut e = LinearExpression::new();
                for (i, l) in &net.arcs.x {
                    if net.arcs.y.iter().any(|(a, b)| a == l && *b == j.id) {
                        e.add_term(&var_v(i, l, &j.id), net.quality(i, k) - limit);
                    }
                }
                for (i, b) in &net.arcs.z {
                    if *b == j.id {
                        e.add_term(&var_z(i, &j.id), net.quality(i, k) - limit);
                    }
                }
                e
            };
            if plo > 0.0 {
                bm.base_mut().add_constraint(format!("quality_lo_{}_{}", j.id, k), row(plo), RowSense::Ge, 0.0)?;
            }
            if phi.is_finite() {
                bm.base_mut().add_constraint(format!("quality_hi_{}_{}", j.id, k), row(phi), RowSense::Le, 0.0)?;
            }
        }
    }
    Ok(bm)
}
