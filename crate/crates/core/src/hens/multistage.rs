use std::collections::BTreeMap;

use crate::model::{
    check_feasibility, make_certificate, ApproximationCertificate, Assignment, BilinearModel, BilinearTerm,
    FeasibilityReport, LinearExpression, LinearModel, ObjectiveSense, RowSense, VariableDef,
};
use crate::solver::{solve_lp, LpStatus};

use super::{require_valid, utility_energy_lower_bound, HensError, HensInstance};

const CHECK_TOL: f64 = 1e-6;

/// Direction of the stagewise temperature rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Monotonicity {
    /// Temperatures never increase with the stage index, for hot and cold
    /// streams alike, matching the inlet and outlet boundary rows.
    #[default]
    NonIncreasing,
    /// `t_{k-1} <= t_k` for both sides, literally; this keeps hot streams
    /// from cooling at all.
    AsPrinted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MultistageOptions {
    pub stages: usize,
    pub monotonicity: Monotonicity,
}

impl MultistageOptions {
    pub fn new(stages: usize) -> Self {
        MultistageOptions { stages, monotonicity: Monotonicity::default() }
    }
}

fn th(i: usize, k: usize) -> String {
    format!("th_{i}_{k}")
}
fn tc(j: usize, k: usize) -> String {
    format!("tc_{j}_{k}")
}
fn fh(i: usize, j: usize, k: usize) -> String {
    format!("fh_{i}_{j}_{k}")
}
fn fc(i: usize, j: usize, k: usize) -> String {
    format!("fc_{i}_{j}_{k}")
}
fn xh(i: usize, j: usize, k: usize) -> String {
    format!("xh_{i}_{j}_{k}")
}
fn xc(i: usize, j: usize, k: usize) -> String {
    format!("xc_{i}_{j}_{k}")
}
fn q(i: usize, j: usize, k: usize) -> String {
    format!("q_{i}_{j}_{k}")
}
fn qcu(i: usize) -> String {
    format!("qcu_{i}")
}
fn qhu(j: usize) -> String {
    format!("qhu_{j}")
}

/// Stagewise superstructure: hot streams run from stage 1 to stage `L`,
/// cold streams from `L` back to 1. In each stage every stream splits into
/// one substream per partner; exchanged heats and isothermal mixing are
/// bilinear. `th_{i}_{k}` is hot stream `i` leaving stage `k` (`k = 0` is
/// its inlet), `tc_{j}_{k}` is cold stream `j` entering stage `k` (`k = L`
/// is its inlet). A stream with no partners passes every stage unchanged.
pub fn build_multistage_qp(inst: &HensInstance, options: MultistageOptions) -> Result<BilinearModel, HensError> {
    require_valid(inst)?;
    let l = options.stages;
    if l == 0 {
        return Err(HensError::NoStages);
    }
    let (nh, nc) = (inst.hot.len(), inst.cold.len());
    let mut base = LinearModel::new(ObjectiveSense::Minimize);
    let mut objective = LinearExpression::new();
    for i in 0..nh {
        base.add_variable(VariableDef::nonnegative(qcu(i)))?;
        objective.add_term(&qcu(i), inst.cost_cu);
        for k in 0..=l {
            base.add_variable(VariableDef::nonnegative(th(i, k)))?;
        }
    }
    for j in 0..nc {
        base.add_variable(VariableDef::nonnegative(qhu(j)))?;
        objective.add_term(&qhu(j), inst.cost_hu);
        for k in 0..=l {
            base.add_variable(VariableDef::nonnegative(tc(j, k)))?;
        }
    }
    for k in 1..=l {
        for i in 0..nh {
            for j in 0..nc {
                for name in [fh(i, j, k), fc(i, j, k), xh(i, j, k), xc(i, j, k), q(i, j, k)] {
                    base.add_variable(VariableDef::nonnegative(name))?;
                }
            }
        }
    }
    base.set_objective(objective)?;
    let mut m = BilinearModel::new(base);
    let e = |terms: &[(&str, f64)]| LinearExpression::from_terms(terms.iter().map(|(v, c)| (v.to_string(), *c)));

    for (i, s) in inst.hot.iter().enumerate() {
        m.add_row(format!("cold_utility_{i}"), e(&[(&qcu(i), 1.0), (&th(i, l), -s.f)]), vec![], RowSense::Eq, -s.f * s.t_out)?;
        m.add_row(format!("hot_start_{i}"), e(&[(&th(i, 0), 1.0)]), vec![], RowSense::Eq, s.t_in)?;
        m.add_row(format!("hot_end_{i}"), e(&[(&th(i, l), 1.0)]), vec![], RowSense::Ge, s.t_out)?;
    }
    for (j, s) in inst.cold.iter().enumerate() {
        m.add_row(format!("hot_utility_{j}"), e(&[(&qhu(j), 1.0), (&tc(j, 0), s.f)]), vec![], RowSense::Eq, s.f * s.t_out)?;
        m.add_row(format!("cold_start_{j}"), e(&[(&tc(j, l), 1.0)]), vec![], RowSense::Eq, s.t_in)?;
        m.add_row(format!("cold_end_{j}"), e(&[(&tc(j, 0), 1.0)]), vec![], RowSense::Le, s.t_out)?;
    }
    for k in 1..=l {
        for (i, s) in inst.hot.iter().enumerate() {
            if nc == 0 {
                m.add_row(format!("hot_pass_{i}_{k}"), e(&[(&th(i, k), 1.0), (&th(i, k - 1), -1.0)]), vec![], RowSense::Eq, 0.0)?;
            } else {
                let split = LinearExpression::from_terms((0..nc).map(|j| (fh(i, j, k), 1.0)));
                m.add_row(format!("hot_split_{i}_{k}"), split, vec![], RowSense::Eq, s.f)?;
                let mix = (0..nc).map(|j| BilinearTerm::new(fh(i, j, k), xh(i, j, k), -1.0)).collect();
                m.add_row(format!("hot_mix_{i}_{k}"), e(&[(&th(i, k), s.f)]), mix, RowSense::Eq, 0.0)?;
            }
            let order = match options.monotonicity {
                Monotonicity::NonIncreasing => e(&[(&th(i, k), 1.0), (&th(i, k - 1), -1.0)]),
                Monotonicity::AsPrinted => e(&[(&th(i, k - 1), 1.0), (&th(i, k), -1.0)]),
            };
            m.add_row(format!("hot_order_{i}_{k}"), order, vec![], RowSense::Le, 0.0)?;
        }
        for (j, s) in inst.cold.iter().enumerate() {
            if nh == 0 {
                m.add_row(format!("cold_pass_{j}_{k}"), e(&[(&tc(j, k - 1), 1.0), (&tc(j, k), -1.0)]), vec![], RowSense::Eq, 0.0)?;
            } else {
                let split = LinearExpression::from_terms((0..nh).map(|i| (fc(i, j, k), 1.0)));
                m.add_row(format!("cold_split_{j}_{k}"), split, vec![], RowSense::Eq, s.f)?;
                let mix = (0..nh).map(|i| BilinearTerm::new(fc(i, j, k), xc(i, j, k), -1.0)).collect();
                m.add_row(format!("cold_mix_{j}_{k}"), e(&[(&tc(j, k - 1), s.f)]), mix, RowSense::Eq, 0.0)?;
            }
            let order = match options.monotonicity {
                Monotonicity::NonIncreasing => e(&[(&tc(j, k), 1.0), (&tc(j, k - 1), -1.0)]),
                Monotonicity::AsPrinted => e(&[(&tc(j, k - 1), 1.0), (&tc(j, k), -1.0)]),
            };
            m.add_row(format!("cold_order_{j}_{k}"), order, vec![], RowSense::Le, 0.0)?;
        }
        for i in 0..nh {
            for j in 0..nc {
                m.add_row(
                    format!("hot_heat_{i}_{j}_{k}"),
                    e(&[(&q(i, j, k), 1.0)]),
                    vec![
                        BilinearTerm::new(fh(i, j, k), th(i, k - 1), -1.0),
                        BilinearTerm::new(fh(i, j, k), xh(i, j, k), 1.0),
                    ],
                    RowSense::Eq,
                    0.0,
                )?;
                m.add_row(
                    format!("cold_heat_{i}_{j}_{k}"),
                    e(&[(&q(i, j, k), 1.0)]),
                    vec![
                        BilinearTerm::new(fc(i, j, k), xc(i, j, k), -1.0),
                        BilinearTerm::new(fc(i, j, k), tc(j, k), 1.0),
                    ],
                    RowSense::Eq,
                    0.0,
                )?;
            }
        }
    }
    Ok(m)
}

/// A point of the multistage model. Stage-indexed maps use keys
/// `(hot, cold, stage)` with stages from 1; `t_hot[i][k]` and `t_cold[j][k]`
/// run over `k = 0..=stages`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MultistageCandidate {
    pub stages: usize,
    pub f_hot: BTreeMap<(usize, usize, usize), f64>,
    pub f_cold: BTreeMap<(usize, usize, usize), f64>,
    pub t_hot: Vec<Vec<f64>>,
    pub t_cold: Vec<Vec<f64>>,
    pub t_hot_exit: BTreeMap<(usize, usize, usize), f64>,
    pub t_cold_exit: BTreeMap<(usize, usize, usize), f64>,
    pub heat: BTreeMap<(usize, usize, usize), f64>,
    pub q_cu: Vec<f64>,
    pub q_hu: Vec<f64>,
}

impl MultistageCandidate {
    pub fn to_assignment(&self) -> Assignment {
        let mut a = Assignment::new();
        for (i, v) in self.q_cu.iter().enumerate() {
            a.set(qcu(i), *v);
        }
        for (j, v) in self.q_hu.iter().enumerate() {
            a.set(qhu(j), *v);
        }
        for (i, row) in self.t_hot.iter().enumerate() {
            for (k, v) in row.iter().enumerate() {
                a.set(th(i, k), *v);
            }
        }
        for (j, row) in self.t_cold.iter().enumerate() {
            for (k, v) in row.iter().enumerate() {
                a.set(tc(j, k), *v);
            }
        }
        let maps: [(&BTreeMap<_, f64>, fn(usize, usize, usize) -> String); 5] =
            [(&self.f_hot, fh), (&self.f_cold, fc), (&self.t_hot_exit, xh), (&self.t_cold_exit, xc), (&self.heat, q)];
        for (map, name) in maps {
            for (&(i, j, k), v) in map {
                a.set(name(i, j, k), *v);
            }
        }
        a
    }

    pub fn from_assignment(inst: &HensInstance, stages: usize, a: &Assignment) -> Self {
        let (nh, nc) = (inst.hot.len(), inst.cold.len());
        let get = |id: String| a.get(&id).unwrap_or(0.0);
        let mut c = MultistageCandidate {
            stages,
            t_hot: (0..nh).map(|i| (0..=stages).map(|k| get(th(i, k))).collect()).collect(),
            t_cold: (0..nc).map(|j| (0..=stages).map(|k| get(tc(j, k))).collect()).collect(),
            q_cu: (0..nh).map(|i| get(qcu(i))).collect(),
            q_hu: (0..nc).map(|j| get(qhu(j))).collect(),
            ..Default::default()
        };
        for k in 1..=stages {
            for i in 0..nh {
                for j in 0..nc {
                    c.f_hot.insert((i, j, k), get(fh(i, j, k)));
                    c.f_cold.insert((i, j, k), get(fc(i, j, k)));
                    c.t_hot_exit.insert((i, j, k), get(xh(i, j, k)));
                    c.t_cold_exit.insert((i, j, k), get(xc(i, j, k)));
                    c.heat.insert((i, j, k), get(q(i, j, k)));
                }
            }
        }
        c
    }

    pub fn cost(&self, inst: &HensInstance) -> f64 {
        inst.cost_cu * self.q_cu.iter().sum::<f64>() + inst.cost_hu * self.q_hu.iter().sum::<f64>()
    }
}

/// Evaluates every row of the multistage model, products included, plus
/// the variable bounds.
pub fn check_multistage_solution(
    inst: &HensInstance,
    candidate: &MultistageCandidate,
    options: MultistageOptions,
    tol: f64,
) -> Result<FeasibilityReport, HensError> {
    let model = build_multistage_qp(inst, options)?;
    Ok(check_feasibility(&model, &candidate.to_assignment(), tol)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultistageOutcome {
    pub candidate: Option<MultistageCandidate>,
    pub cost: Option<f64>,
    /// Energy-balance bound on the utility cost.
    pub bound: f64,
    pub certificate: Option<ApproximationCertificate>,
    pub iterations: usize,
    pub failure: Option<String>,
}

fn solve_fixed(model: &BilinearModel, fixed: &Assignment) -> Result<Option<Assignment>, HensError> {
    let linear = model.fix(fixed)?.into_linear()?;
    let out = solve_lp(&linear);
    Ok(match (out.status, out.primal) {
        (LpStatus::Optimal, Some(a)) => Some(a),
        _ => None,
    })
}

fn pick(a: &Assignment, prefixes: &[&str]) -> Assignment {
    let mut out = Assignment::new();
    for (id, v) in a.iter() {
        if prefixes.iter().any(|p| id.starts_with(p)) {
            out.set(id.clone(), *v);
        }
    }
    out
}

/// Alternates two LPs: with split capacities fixed the temperatures and
/// heats are linear, and with temperatures fixed the capacities are.
/// Starts from even splits and keeps the cheapest iterate that passes the
/// checker.
pub fn alternating_multistage_heuristic(
    inst: &HensInstance,
    options: MultistageOptions,
    max_iters: usize,
) -> Result<MultistageOutcome, HensError> {
    let model = build_multistage_qp(inst, options)?;
    let bound = utility_energy_lower_bound(inst);
    let (nh, nc) = (inst.hot.len(), inst.cold.len());
    let mut flows = Assignment::new();
    for k in 1..=options.stages {
        for (i, h) in inst.hot.iter().enumerate() {
            for (j, c) in inst.cold.iter().enumerate() {
                flows.set(fh(i, j, k), h.f / nc as f64);
                flows.set(fc(i, j, k), c.f / nh as f64);
            }
        }
    }
    let mut best: Option<(f64, MultistageCandidate)> = None;
    let mut iterations = 0;
    let consider = |a: &Assignment, best: &mut Option<(f64, MultistageCandidate)>| -> Result<bool, HensError> {
        let cand = MultistageCandidate::from_assignment(inst, options.stages, a);
        if !check_feasibility(&model, &cand.to_assignment(), CHECK_TOL)?.is_feasible() {
            return Ok(false);
        }
        let cost = cand.cost(inst);
        let improved = best.as_ref().is_none_or(|(b, _)| cost < b - 1e-9 * b.abs().max(1.0));
        if improved {
            *best = Some((cost, cand));
        }
        Ok(improved)
    };
    for _ in 0..max_iters.max(1) {
        iterations += 1;
        let Some(temps) = solve_fixed(&model, &flows)? else { break };
        let mut improved = consider(&temps, &mut best)?;
        let Some(next) = solve_fixed(&model, &pick(&temps, &["th_", "tc_", "xh_", "xc_"]))? else { break };
        improved |= consider(&next, &mut best)?;
        flows = pick(&next, &["fh_", "fc_"]);
        if !improved {
            break;
        }
    }
    Ok(match best {
        Some((cost, candidate)) => MultistageOutcome {
            certificate: Some(make_certificate(ObjectiveSense::Minimize, cost, bound)),
            candidate: Some(candidate),
            cost: Some(cost),
            bound,
            iterations,
            failure: None,
        },
        None => MultistageOutcome {
            candidate: None,
            cost: None,
            bound,
            certificate: None,
            iterations,
            failure: Some("no iterate passed the multistage checker".into()),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::super::Stream;
    use super::*;
    use crate::model::CertificateFlag;

    fn zero_cost_candidate() -> MultistageCandidate {
        let key = (0, 0, 1);
        MultistageCandidate {
            stages: 1,
            f_hot: [(key, 1.0)].into(),
            f_cold: [(key, 1.0)].into(),
            t_hot: vec![vec![150.0, 50.0]],
            t_cold: vec![vec![140.0, 40.0]],
            t_hot_exit: [(key, 50.0)].into(),
            t_cold_exit: [(key, 140.0)].into(),
            heat: [(key, 100.0)].into(),
            q_cu: vec![0.0],
            q_hu: vec![0.0],
        }
    }

    #[test]
    fn one_pair_one_stage_row_counts() {
        let m = build_multistage_qp(&pair(1.0, 1.0), MultistageOptions::new(1)).unwrap();
        assert_eq!(m.bilinear_row_count(), 4);
        assert_eq!(m.products("hot_heat_0_0_1").len(), 2);
        assert_eq!(m.products("hot_mix_0_1").len(), 1);
    }

    #[test]
    fn hand_built_candidate_is_feasible() {
        let inst = pair(1.0, 1.0);
        let c = zero_cost_candidate();
        let r = check_multistage_solution(&inst, &c, MultistageOptions::new(1), 1e-9).unwrap();
        assert!(r.is_feasible(), "{r:?}");
        assert_eq!(c.cost(&inst), 0.0);
    }

    #[test]
    fn checker_names_violations() {
        let inst = pair(1.0, 1.0);
        let mut c = zero_cost_candidate();
        c.f_hot.insert((0, 0, 1), -1.0);
        let r = check_multistage_solution(&inst, &c, MultistageOptions::new(1), 1e-9).unwrap();
        assert!(r.find("bound:fh_0_0_1").is_some());
        assert!(r.find("hot_split_0_1").is_some());
    }

    #[test]
    fn alternating_reaches_zero_cost() {
        let out = alternating_multistage_heuristic(&pair(1.0, 1.0), MultistageOptions::new(1), 20).unwrap();
        assert_eq!(out.cost, Some(0.0));
        assert_eq!(out.certificate.unwrap().flag, CertificateFlag::Exact);
    }

    #[test]
    fn no_cold_streams_sends_everything_to_cold_utility() {
        let mut inst = HensInstance::new(vec![Stream::new("h", 150.0, 50.0, 2.0)], vec![]);
        inst.cost_cu = 3.0;
        let out = alternating_multistage_heuristic(&inst, MultistageOptions::new(2), 10).unwrap();
        assert!((out.cost.unwrap() - 600.0).abs() < 1e-6);
        assert!((out.bound - 600.0).abs() < 1e-9);
    }

    #[test]
    fn printed_orientation_blocks_cooling() {
        let options = MultistageOptions { stages: 1, monotonicity: Monotonicity::AsPrinted };
        let r = check_multistage_solution(&pair(1.0, 1.0), &zero_cost_candidate(), options, 1e-9).unwrap();
        assert!(r.find("hot_order_0_1").is_some());
    }
}
