use std::collections::BTreeMap;

use crate::model::{
    BilinearModel, Integrality, LinearExpression, LinearModel, ModelError, RowSense, VariableDef,
    OBJECTIVE_LABEL,
};
use crate::solver::{solve_lp, solve_milp, LpStatus, MilpLimits, MilpStatus};

use super::{build_p_formulation, build_pq_formulation, PoolingError, PoolingNetwork};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Formulation {
    P,
    Pq,
}

impl Formulation {
    pub fn build(self, net: &PoolingNetwork) -> Result<BilinearModel, PoolingError> {
        match self {
            Formulation::P => build_p_formulation(net),
            Formulation::Pq => build_pq_formulation(net),
        }
    }
}

fn finite_bounds(model: &LinearModel, id: &str) -> Result<(f64, f64), ModelError> {
    let v = model.variable(id).ok_or_else(|| ModelError::UndeclaredVariable(id.to_string()))?;
    if v.lower.is_finite() && v.upper.is_finite() {
        Ok((v.lower, v.upper))
    } else {
        Err(ModelError::UnboundedFactor(id.to_string()))
    }
}

/// Replaces every product `a * b` by an auxiliary `w_{a}_{b}` (shared by all
/// occurrences of the same pair) constrained by McCormick envelopes.
///
/// With `pieces == 1` the result is a pure LP with the four classic envelope
/// rows. With more pieces the domain of the first factor `a` is split into
/// `pieces` equal segments selected by binaries `lam_{a}_{n}` (shared by all
/// products of `a`); `b` is disaggregated into segment copies and the four
/// envelope rows are written over the active segment. Any integer solution
/// of the result lies in the union of the per-segment envelopes, so the
/// relaxation only tightens as nested partitions are refined.
pub fn piecewise_mccormick_relax(model: &BilinearModel, pieces: usize) -> Result<LinearModel, ModelError> {
    assert!(pieces >= 1, "at least one piece is required");
    let mut out = model.base().clone();
    let mut pairs: Vec<(String, String)> = Vec::new();
    let mut index: BTreeMap<(String, String), usize> = BTreeMap::new();
    for (_, terms) in model.bilinear_rows() {
        for t in terms {
            let key = (t.a.clone(), t.b.clone());
            if !index.contains_key(&key) {
                index.insert(key.clone(), pairs.len());
                pairs.push(key);
            }
        }
    }
    let w_name = |a: &str, b: &str| format!("w_{a}_{b}");
    let mut partitioned: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for (a, b) in &pairs {
        let (al, au) = finite_bounds(model.base(), a)?;
        let (bl, bu) = finite_bounds(model.base(), b)?;
        let corners = [al * bl, al * bu, au * bl, au * bu];
        let lo = corners.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = corners.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w = w_name(a, b);
        out.add_variable(VariableDef::continuous(&w, lo, hi))?;
        if pieces == 1 {
            let rows = [
                ("mc1", RowSense::Ge, al, bl),
                ("mc2", RowSense::Ge, au, bu),
                ("mc3", RowSense::Le, au, bl),
                ("mc4", RowSense::Le, al, bu),
            ];
            for (tag, sense, ak, bk) in rows {
                // w (sense) ak*b + bk*a - ak*bk
                let mut e = LinearExpression::from_terms([(w.as_str(), 1.0)]);
                e.add_term(b, -ak);
                e.add_term(a, -bk);
                out.add_constraint(format!("{tag}_{a}_{b}"), e, sense, -ak * bk)?;
            }
            continue;
        }
        let segments = partitioned.entry(a.clone()).or_insert_with(|| {
            let width = (au - al) / pieces as f64;
            (0..pieces)
                .map(|n| {
                    let lo = al + width * n as f64;
                    let hi = if n + 1 == pieces { au } else { al + width * (n + 1) as f64 };
                    (lo, hi)
                })
                .collect()
        });
        let segments = segments.clone();
        let mut split = LinearExpression::from_terms([(b.as_str(), -1.0)]);
        let seg_names: Vec<String> = (0..pieces).map(|n| format!("bseg_{a}_{b}_{n}")).collect();
        for (n, name) in seg_names.iter().enumerate() {
            out.add_variable(VariableDef::continuous(name, bl.min(0.0), bu.max(0.0)))?;
            split.add_term(name, 1.0);
            let lam = format!("lam_{a}_{n}");
            if out.variable(&lam).is_none() {
                out.add_variable(VariableDef::binary(&lam))?;
            }
            out.add_constraint(
                format!("bseg_lo_{a}_{b}_{n}"),
                LinearExpression::from_terms([(name.as_str(), 1.0), (lam.as_str(), -bl)]),
                RowSense::Ge,
                0.0,
            )?;
            out.add_constraint(
                format!("bseg_hi_{a}_{b}_{n}"),
                LinearExpression::from_terms([(name.as_str(), 1.0), (lam.as_str(), -bu)]),
                RowSense::Le,
                0.0,
            )?;
        }
        out.add_constraint(format!("split_{a}_{b}"), split, RowSense::Eq, 0.0)?;
        // (row tag, sense, which segment end multiplies b_n, bound of b multiplying a)
        let rows = [
            ("mc1", RowSense::Ge, false, bl),
            ("mc2", RowSense::Ge, true, bu),
            ("mc3", RowSense::Le, true, bl),
            ("mc4", RowSense::Le, false, bu),
        ];
        for (tag, sense, upper_end, bk) in rows {
            let mut e = LinearExpression::from_terms([(w.as_str(), 1.0)]);
            e.add_term(a, -bk);
            for (n, &(lo, hi)) in segments.iter().enumerate() {
                let ak = if upper_end { hi } else { lo };
                e.add_term(&seg_names[n], -ak);
                e.add_term(&format!("lam_{a}_{n}"), bk * ak);
            }
            out.add_constraint(format!("{tag}_{a}_{b}"), e, sense, 0.0)?;
        }
    }
    for (a, segments) in &partitioned {
        let pick = LinearExpression::from_terms((0..segments.len()).map(|n| (format!("lam_{a}_{n}"), 1.0)));
        out.add_constraint(format!("pick_{a}"), pick, RowSense::Eq, 1.0)?;
        let mut lo = LinearExpression::from_terms([(a.as_str(), 1.0)]);
        let mut hi = LinearExpression::from_terms([(a.as_str(), 1.0)]);
        for (n, &(sl, su)) in segments.iter().enumerate() {
            lo.add_term(&format!("lam_{a}_{n}"), -sl);
            hi.add_term(&format!("lam_{a}_{n}"), -su);
        }
        out.add_constraint(format!("seg_lo_{a}"), lo, RowSense::Ge, 0.0)?;
        out.add_constraint(format!("seg_hi_{a}"), hi, RowSense::Le, 0.0)?;
    }
    // substitute the auxiliaries into the rows and the objective
    let mut obj = out.objective().clone();
    for t in model.products(OBJECTIVE_LABEL) {
        obj.add_term(&w_name(&t.a, &t.b), t.coefficient);
    }
    out.set_objective(obj)?;
    let mut rebuilt = LinearModel::new(out.sense());
    for v in out.variables() {
        rebuilt.add_variable(v.clone())?;
    }
    rebuilt.set_objective(out.objective().clone())?;
    for c in out.constraints() {
        let mut e = c.expr.clone();
        for t in model.products(&c.label) {
            e.add_term(&w_name(&t.a, &t.b), t.coefficient);
        }
        rebuilt.add_constraint(c.label.clone(), e, c.sense, c.rhs)?;
    }
    Ok(rebuilt)
}

/// Lower bound on the pooling optimum from the (piecewise) McCormick
/// relaxation of the chosen formulation. `None` if the relaxation is
/// infeasible (so is the network) or the MILP search did not finish.
pub fn relaxation_bound(net: &PoolingNetwork, formulation: Formulation, pieces: usize) -> Result<Option<f64>, PoolingError> {
    if pieces == 0 {
        return Err(PoolingError::ZeroResolution);
    }
    let relaxed = piecewise_mccormick_relax(&formulation.build(net)?, pieces)?;
    if relaxed.variables().iter().any(|v| v.integrality != Integrality::Continuous) {
        let out = solve_milp(&relaxed, &MilpLimits::default());
        Ok(match out.status {
            MilpStatus::Optimal => Some(out.objective),
            MilpStatus::FeasibleLimit | MilpStatus::NodeLimit => Some(out.best_bound),
            _ => None,
        })
    } else {
        let out = solve_lp(&relaxed);
        Ok((out.status == LpStatus::Optimal).then_some(out.objective))
    }
}
