use itertools::Itertools;

use crate::model::{LinearModel, RowSense};

use super::simplex::{solve_bounded, LpData};
use super::{LpOutcome, LpStatus, MilpOutcome, MilpStatus, OracleError};

const VERTEX_VAR_LIMIT: usize = 8;
const BINARY_LIMIT: usize = 16;

/// Solves `a x = b` for square `a` by Gaussian elimination with partial
/// pivoting; `None` when the system is (numerically) singular.
fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &k| a[i][col].abs().total_cmp(&a[k][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

fn point_feasible(data: &LpData, x: &[f64]) -> bool {
    let tol = 1e-7;
    for (j, &v) in x.iter().enumerate() {
        if v < data.lower[j] - tol || v > data.upper[j] + tol {
            return false;
        }
    }
    data.rows.iter().all(|row| {
        let lhs: f64 = row.coefs.iter().map(|&(j, a)| a * x[j]).sum();
        let scale = tol * (1.0 + row.rhs.abs());
        match row.sense {
            RowSense::Le => lhs <= row.rhs + scale,
            RowSense::Ge => lhs >= row.rhs - scale,
            RowSense::Eq => (lhs - row.rhs).abs() <= scale,
        }
    })
}

/// Exhaustive search over intersections of `n` constraint hyperplanes
/// (rows and variable bounds). Slow by design; a cross-check for
/// [`solve_lp`](super::solve_lp) on small bounded models.
pub fn enumerate_vertices_oracle(model: &LinearModel) -> Result<LpOutcome, OracleError> {
    let data = LpData::from_model(model);
    let n = data.ids.len();
    if n > VERTEX_VAR_LIMIT {
        return Err(OracleError::TooLarge { what: "variables", limit: VERTEX_VAR_LIMIT, actual: n });
    }
    for j in 0..n {
        if !data.lower[j].is_finite() || !data.upper[j].is_finite() {
            return Err(OracleError::UnboundedVariable(data.ids[j].clone()));
        }
    }
    // Every vertex satisfies all equality rows, so a maximal independent
    // subset of them is part of every candidate basis; dependent ones are
    // still enforced by the feasibility check.
    let mut mandatory: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut reduced: Vec<Vec<f64>> = Vec::new();
    let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
    for row in &data.rows {
        let mut a = vec![0.0; n];
        for &(j, c) in &row.coefs {
            a[j] += c;
        }
        if row.sense != RowSense::Eq {
            planes.push((a, row.rhs));
            continue;
        }
        let mut r = a.clone();
        for basis in &reduced {
            let p = basis.iter().position(|v| v.abs() > 1e-9).expect("nonzero");
            let f = r[p] / basis[p];
            for (x, b) in r.iter_mut().zip(basis) {
                *x -= f * b;
            }
        }
        if r.iter().any(|v| v.abs() > 1e-9) {
            reduced.push(r);
            mandatory.push((a, row.rhs));
        }
    }
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        planes.push((e.clone(), data.lower[j]));
        planes.push((e, data.upper[j]));
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut examined = 0usize;
    for combo in (0..planes.len()).combinations(n - mandatory.len()) {
        examined += 1;
        let chosen = mandatory.iter().chain(combo.iter().map(|&i| &planes[i]));
        let (a, b): (Vec<Vec<f64>>, Vec<f64>) = chosen.cloned().unzip();
        let Some(x) = solve_square(a, b) else { continue };
        if !point_feasible(&data, &x) {
            continue;
        }
        let v = data.min_objective(&x);
        if best.as_ref().is_none_or(|(bv, _)| v < *bv - 1e-12) {
            best = Some((v, x));
        }
    }
    Ok(match best {
        Some((v, x)) => LpOutcome {
            status: LpStatus::Optimal,
            objective: data.user_objective(v),
            primal: Some(data.assignment(&x)),
            iteration_count: examined,
        },
        None => LpOutcome { status: LpStatus::Infeasible, objective: f64::NAN, primal: None, iteration_count: examined },
    })
}

/// Fixes every listed binary in all `2^k` ways and solves the remaining LP.
/// Any other integer variable in the model is an error.
pub fn brute_force_binary_oracle(model: &LinearModel, binaries: &[String]) -> Result<MilpOutcome, OracleError> {
    if binaries.len() > BINARY_LIMIT {
        return Err(OracleError::TooLarge { what: "binaries", limit: BINARY_LIMIT, actual: binaries.len() });
    }
    let data = LpData::from_model(model);
    let mut cols = Vec::with_capacity(binaries.len());
    for id in binaries {
        let j = model.var_index(id).ok_or_else(|| OracleError::UnknownVariable(id.clone()))?;
        if data.lower[j] < 0.0 || data.upper[j] > 1.0 {
            return Err(OracleError::NonBinaryInteger(id.clone()));
        }
        cols.push(j);
    }
    for j in 0..data.ids.len() {
        if data.integer[j] && !cols.contains(&j) {
            return Err(OracleError::NonBinaryInteger(data.ids[j].clone()));
        }
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    let count = 1usize << cols.len();
    for mask in 0..count {
        let mut lo = data.lower.clone();
        let mut hi = data.upper.clone();
        for (bit, &j) in cols.iter().enumerate() {
            let v = ((mask >> bit) & 1) as f64;
            lo[j] = v;
            hi[j] = v;
        }
        let raw = solve_bounded(&data, &lo, &hi);
        if raw.status == LpStatus::Optimal && best.as_ref().is_none_or(|(b, _)| raw.objective < *b - 1e-12) {
            best = Some((raw.objective, raw.x));
        }
    }
    Ok(match best {
        Some((v, x)) => MilpOutcome {
            status: MilpStatus::Optimal,
            objective: data.user_objective(v),
            primal: Some(data.assignment(&x)),
            best_bound: data.user_objective(v),
            nodes_explored: count,
        },
        None => MilpOutcome {
            status: MilpStatus::Infeasible,
            objective: f64::NAN,
            primal: None,
            best_bound: data.user_objective(f64::INFINITY),
            nodes_explored: count,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{LinearExpression, ObjectiveSense, VariableDef};
    use crate::solver::{solve_lp, solve_milp, MilpLimits};

    #[test]
    fn vertex_oracle_agrees_on_small_lp() {
        let mut m = LinearModel::new(ObjectiveSense::Maximize);
        m.add_variable(VariableDef::continuous("x", 0.0, 4.0)).unwrap();
        m.add_variable(VariableDef::continuous("y", 0.0, 4.0)).unwrap();
        m.set_objective(LinearExpression::from_terms([("x", 3.0), ("y", 2.0)])).unwrap();
        m.add_constraint("a", LinearExpression::from_terms([("x", 1.0), ("y", 1.0)]), RowSense::Le, 5.0)
            .unwrap();
        m.add_constraint("b", LinearExpression::from_terms([("x", 1.0), ("y", -1.0)]), RowSense::Le, 2.0)
            .unwrap();
        let exact = enumerate_vertices_oracle(&m).unwrap();
        // vertex (3.5, 1.5)
        assert!((exact.objective - 13.5).abs() < 1e-9);
        assert!((solve_lp(&m).objective - exact.objective).abs() < 1e-9);
    }

    #[test]
    fn free_binary_minimum_is_zero() {
        let mut m = LinearModel::new(ObjectiveSense::Minimize);
        m.add_variable(VariableDef::binary("y")).unwrap();
        m.set_objective(LinearExpression::from_terms([("y", 1.0)])).unwrap();
        let out = brute_force_binary_oracle(&m, &["y".to_string()]).unwrap();
        assert_eq!(out.objective, 0.0);
        let milp = solve_milp(&m, &MilpLimits::default());
        assert_eq!(milp.objective, 0.0);
    }

    #[test]
    fn all_infeasible_enumeration() {
        let mut m = LinearModel::new(ObjectiveSense::Minimize);
        m.add_variable(VariableDef::binary("a")).unwrap();
        m.add_variable(VariableDef::binary("b")).unwrap();
        m.add_constraint("c", LinearExpression::from_terms([("a", 1.0), ("b", 1.0)]), RowSense::Ge, 3.0)
            .unwrap();
        let out = brute_force_binary_oracle(&m, &["a".to_string(), "b".to_string()]).unwrap();
        assert_eq!(out.status, MilpStatus::Infeasible);
    }

    #[test]
    fn size_limits_are_errors() {
        let mut m = LinearModel::new(ObjectiveSense::Minimize);
        for i in 0..9 {
            m.add_variable(VariableDef::continuous(format!("x{i}"), 0.0, 1.0)).unwrap();
        }
        assert!(matches!(enumerate_vertices_oracle(&m), Err(OracleError::TooLarge { .. })));
        let mut m = LinearModel::new(ObjectiveSense::Minimize);
        m.add_variable(VariableDef::nonnegative("x")).unwrap();
        assert!(matches!(enumerate_vertices_oracle(&m), Err(OracleError::UnboundedVariable(_))));
    }
}
