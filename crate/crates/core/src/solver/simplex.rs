use crate::model::{Assignment, LinearModel, ObjectiveSense, RowSense};

use super::{LpOutcome, LpStatus};

const PIVOT_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-9;
/// Consecutive degenerate pivots tolerated before switching to Bland's rule.
const STALL_LIMIT: usize = 50;

#[derive(Debug, Clone)]
pub(crate) struct SparseRow {
    pub coefs: Vec<(usize, f64)>,
    pub sense: RowSense,
    pub rhs: f64,
}

/// Index-based copy of a [`LinearModel`], objective always minimised.
#[derive(Debug, Clone)]
pub(crate) struct LpData {
    pub ids: Vec<String>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub integer: Vec<bool>,
    pub cost: Vec<f64>,
    pub cost_const: f64,
    pub rows: Vec<SparseRow>,
    pub maximize: bool,
}

impl LpData {
    pub fn from_model(model: &LinearModel) -> Self {
        let n = model.variables().len();
        let flip = if model.sense() == ObjectiveSense::Maximize { -1.0 } else { 1.0 };
        let mut cost = vec![0.0; n];
        for (id, c) in model.objective().terms() {
            cost[model.var_index(id).expect("declared")] += flip * c;
        }
        let rows = model
            .constraints()
            .iter()
            .map(|c| SparseRow {
                coefs: c
                    .expr
                    .terms()
                    .iter()
                    .filter(|(_, v)| *v != 0.0)
                    .map(|(id, v)| (model.var_index(id).expect("declared"), *v))
                    .collect(),
                sense: c.sense,
                rhs: c.rhs - c.expr.constant(),
            })
            .collect();
        LpData {
            ids: model.variables().iter().map(|v| v.id.clone()).collect(),
            lower: model.variables().iter().map(|v| v.lower).collect(),
            upper: model.variables().iter().map(|v| v.upper).collect(),
            integer: model.variables().iter().map(|v| v.is_integer()).collect(),
            cost,
            cost_const: flip * model.objective().constant(),
            rows,
            maximize: model.sense() == ObjectiveSense::Maximize,
        }
    }

    pub fn min_objective(&self, x: &[f64]) -> f64 {
        self.cost_const + self.cost.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }

    /// Converts an internal minimisation value back to the model's sense.
    pub fn user_objective(&self, v: f64) -> f64 {
        if self.maximize {
            -v
        } else {
            v
        }
    }

    pub fn assignment(&self, x: &[f64]) -> Assignment {
        self.ids.iter().cloned().zip(x.iter().copied()).collect()
    }
}

#[derive(Debug, Clone)]
pub(crate) struct RawLp {
    pub status: LpStatus,
    pub x: Vec<f64>,
    /// Minimisation-form objective.
    pub objective: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy)]
enum Column {
    Fixed(f64),
    /// x = lower + col
    Shift(usize, f64),
    /// x = upper - col
    Flip(usize, f64),
    /// x = pos - neg
    Split(usize, usize),
}

struct Tableau {
    m: usize,
    width: usize,
    t: Vec<f64>,
    beta: Vec<f64>,
    basis: Vec<usize>,
    ub: Vec<f64>,
    at_upper: Vec<bool>,
    basic: Vec<bool>,
    d: Vec<f64>,
    iterations: usize,
    cap: usize,
}

enum Stop {
    Optimal,
    Unbounded,
    Limit,
}

impl Tableau {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.width + j]
    }

    fn price(&mut self, cost: &[f64]) {
        self.d.clear();
        self.d.extend_from_slice(cost);
        for i in 0..self.m {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.t[i * self.width..(i + 1) * self.width];
                for (dj, a) in self.d.iter_mut().zip(row) {
                    *dj -= cb * a;
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let w = self.width;
        let p = self.t[r * w + j];
        for v in &mut self.t[r * w..(r + 1) * w] {
            *v /= p;
        }
        let pivot_row: Vec<f64> = self.t[r * w..(r + 1) * w].to_vec();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * w + j];
            if f != 0.0 {
                for (v, a) in self.t[i * w..(i + 1) * w].iter_mut().zip(&pivot_row) {
                    *v -= f * a;
                }
                self.t[i * w + j] = 0.0;
            }
        }
        let f = self.d[j];
        if f != 0.0 {
            for (v, a) in self.d.iter_mut().zip(&pivot_row) {
                *v -= f * a;
            }
            self.d[j] = 0.0;
        }
        let leaving = self.basis[r];
        self.basic[leaving] = false;
        self.basic[j] = true;
        self.basis[r] = j;
    }

    fn value(&self, j: usize) -> f64 {
        if self.at_upper[j] {
            self.ub[j]
        } else {
            0.0
        }
    }

    fn run(&mut self, allowed: usize) -> Stop {
        let mut stalled = 0usize;
        loop {
            if self.iterations >= self.cap {
                return Stop::Limit;
            }
            let bland = stalled >= STALL_LIMIT;
            let mut enter: Option<(usize, f64)> = None;
            let mut best = 0.0;
            for j in 0..allowed {
                if self.basic[j] {
                    continue;
                }
                let dj = self.d[j];
                let dir = if !self.at_upper[j] && dj < -DUAL_TOL {
                    1.0
                } else if self.at_upper[j] && dj > DUAL_TOL {
                    -1.0
                } else {
                    continue;
                };
                if bland {
                    enter = Some((j, dir));
                    break;
                }
                if dj.abs() > best {
                    best = dj.abs();
                    enter = Some((j, dir));
                }
            }
            let Some((j, dir)) = enter else {
                return Stop::Optimal;
            };
            let mut step = self.ub[j];
            let mut leave: Option<(usize, bool)> = None;
            let mut leave_alpha = 0.0f64;
            for i in 0..self.m {
                let alpha = self.at(i, j);
                let rate = -dir * alpha;
                let (lim, to_upper) = if rate < -PIVOT_TOL {
                    (self.beta[i].max(0.0) / -rate, false)
                } else if rate > PIVOT_TOL && self.ub[self.basis[i]].is_finite() {
                    ((self.ub[self.basis[i]] - self.beta[i]).max(0.0) / rate, true)
                } else {
                    continue;
                };
                let better = match leave {
                    _ if lim < step - 1e-12 => true,
                    None => lim <= step,
                    Some((li, _)) => {
                        lim <= step + 1e-12
                            && if bland {
                                self.basis[i] < self.basis[li]
                            } else {
                                alpha.abs() > leave_alpha
                            }
                    }
                };
                if better {
                    step = step.min(lim);
                    leave = Some((i, to_upper));
                    leave_alpha = alpha.abs();
                }
            }
            if !step.is_finite() {
                return Stop::Unbounded;
            }
            self.iterations += 1;
            if step <= 1e-12 {
                stalled += 1;
            } else {
                stalled = 0;
            }
            for i in 0..self.m {
                let alpha = self.at(i, j);
                if alpha != 0.0 {
                    self.beta[i] -= dir * alpha * step;
                }
            }
            match leave {
                None => self.at_upper[j] = !self.at_upper[j],
                Some((r, to_upper)) => {
                    let entering_value = if dir > 0.0 { self.value(j) + step } else { self.ub[j] - step };
                    let leaving = self.basis[r];
                    self.pivot(r, j);
                    self.at_upper[leaving] = to_upper;
                    self.at_upper[j] = false;
                    self.beta[r] = entering_value;
                }
            }
        }
    }
}

pub(crate) fn solve_bounded(data: &LpData, lower: &[f64], upper: &[f64]) -> RawLp {
    let n = data.ids.len();
    let infeasible = |iterations| RawLp {
        status: LpStatus::Infeasible,
        x: Vec::new(),
        objective: f64::NAN,
        iterations,
    };
    let mut columns = Vec::with_capacity(n);
    let mut col_ub: Vec<f64> = Vec::new();
    let mut col_cost: Vec<f64> = Vec::new();
    for j in 0..n {
        let (l, u) = (lower[j], upper[j]);
        if l > u + 1e-9 {
            return infeasible(0);
        }
        let c = data.cost[j];
        let col = if l.is_finite() && u.is_finite() && (u - l).abs() <= 1e-12 {
            Column::Fixed(l)
        } else if l.is_finite() {
            col_ub.push(u - l);
            col_cost.push(c);
            Column::Shift(col_ub.len() - 1, l)
        } else if u.is_finite() {
            col_ub.push(f64::INFINITY);
            col_cost.push(-c);
            Column::Flip(col_ub.len() - 1, u)
        } else {
            col_ub.push(f64::INFINITY);
            col_cost.push(c);
            col_ub.push(f64::INFINITY);
            col_cost.push(-c);
            Column::Split(col_ub.len() - 2, col_ub.len() - 1)
        };
        columns.push(col);
    }
    let structural = col_ub.len();
    let m = data.rows.len();
    let slack_count = data.rows.iter().filter(|r| r.sense != RowSense::Eq).count();
    let width = structural + slack_count + m;
    let mut t = vec![0.0; m * width];
    let mut beta = vec![0.0; m];
    let mut basis = vec![0; m];
    let mut slack = structural;
    for (i, row) in data.rows.iter().enumerate() {
        let mut rhs = row.rhs;
        let line = &mut t[i * width..(i + 1) * width];
        for &(j, a) in &row.coefs {
            match columns[j] {
                Column::Fixed(v) => rhs -= a * v,
                Column::Shift(c, l) => {
                    line[c] += a;
                    rhs -= a * l;
                }
                Column::Flip(c, u) => {
                    line[c] -= a;
                    rhs -= a * u;
                }
                Column::Split(p, q) => {
                    line[p] += a;
                    line[q] -= a;
                }
            }
        }
        let slack_col = match row.sense {
            RowSense::Le => {
                line[slack] = 1.0;
                slack += 1;
                Some(slack - 1)
            }
            RowSense::Ge => {
                line[slack] = -1.0;
                slack += 1;
                Some(slack - 1)
            }
            RowSense::Eq => None,
        };
        if rhs < 0.0 {
            for v in line.iter_mut() {
                *v = -*v;
            }
            rhs = -rhs;
        }
        beta[i] = rhs;
        let art = structural + slack_count + i;
        line[art] = 1.0;
        basis[i] = match slack_col {
            Some(s) if line[s] == 1.0 => s,
            _ => art,
        };
    }
    let mut ub = col_ub;
    ub.extend(std::iter::repeat_n(f64::INFINITY, slack_count + m));
    let mut basic = vec![false; width];
    for &b in &basis {
        basic[b] = true;
    }
    let art_start = structural + slack_count;
    // artificial columns never used as the starting basis are dropped by
    // giving them a zero range
    for i in 0..m {
        if !basic[art_start + i] {
            ub[art_start + i] = 0.0;
        }
    }
    let mut tab = Tableau {
        m,
        width,
        t,
        beta,
        basis,
        ub,
        at_upper: vec![false; width],
        basic,
        d: Vec::with_capacity(width),
        iterations: 0,
        cap: 20_000 + 50 * (m + width),
    };

    let mut phase1 = vec![0.0; width];
    let needs_phase1 = tab.basis.iter().any(|&b| b >= art_start);
    if needs_phase1 {
        for c in &mut phase1[art_start..] {
            *c = 1.0;
        }
        tab.price(&phase1);
        match tab.run(width) {
            Stop::Limit => {
                return RawLp { status: LpStatus::IterationLimit, x: Vec::new(), objective: f64::NAN, iterations: tab.iterations }
            }
            Stop::Unbounded => unreachable!("phase one objective is bounded below"),
            Stop::Optimal => {}
        }
        let scale = 1.0 + data.rows.iter().map(|r| r.rhs.abs()).fold(0.0, f64::max);
        let residual: f64 = (0..m)
            .filter(|&i| tab.basis[i] >= art_start)
            .map(|i| tab.beta[i])
            .sum();
        if residual > 1e-9 * scale {
            return infeasible(tab.iterations);
        }
        for r in 0..m {
            if tab.basis[r] < art_start {
                continue;
            }
            let mut pick = None;
            let mut best = PIVOT_TOL * 1e3;
            for j in 0..art_start {
                if !tab.basic[j] && tab.at(r, j).abs() > best {
                    best = tab.at(r, j).abs();
                    pick = Some(j);
                }
            }
            if let Some(j) = pick {
                let v = tab.value(j);
                tab.pivot(r, j);
                tab.at_upper[j] = false;
                tab.beta[r] = v;
            }
        }
        for j in art_start..width {
            tab.ub[j] = 0.0;
            tab.at_upper[j] = false;
        }
    }
    let mut phase2 = vec![0.0; width];
    phase2[..structural].copy_from_slice(&col_cost);
    tab.price(&phase2);
    match tab.run(art_start) {
        Stop::Optimal => {}
        Stop::Unbounded => {
            return RawLp { status: LpStatus::Unbounded, x: Vec::new(), objective: f64::NEG_INFINITY, iterations: tab.iterations }
        }
        Stop::Limit => {
            return RawLp { status: LpStatus::IterationLimit, x: Vec::new(), objective: f64::NAN, iterations: tab.iterations }
        }
    }
    let mut vals: Vec<f64> = (0..structural).map(|j| tab.value(j)).collect();
    for i in 0..m {
        if tab.basis[i] < structural {
            vals[tab.basis[i]] = tab.beta[i];
        }
    }
    let x: Vec<f64> = columns
        .iter()
        .map(|c| match *c {
            Column::Fixed(v) => v,
            Column::Shift(c, l) => l + vals[c],
            Column::Flip(c, u) => u - vals[c],
            Column::Split(p, q) => vals[p] - vals[q],
        })
        .collect();
    let objective = data.min_objective(&x);
    RawLp { status: LpStatus::Optimal, x, objective, iterations: tab.iterations }
}

/// Solves the continuous relaxation of `model` (integrality is ignored).
pub fn solve_lp(model: &LinearModel) -> LpOutcome {
    let data = LpData::from_model(model);
    let raw = solve_bounded(&data, &data.lower, &data.upper);
    let optimal = raw.status == LpStatus::Optimal;
    LpOutcome {
        status: raw.status,
        objective: match raw.status {
            LpStatus::Optimal => data.user_objective(raw.objective),
            LpStatus::Unbounded => data.user_objective(f64::NEG_INFINITY),
            _ => f64::NAN,
        },
        primal: optimal.then(|| data.assignment(&raw.x)),
        iteration_count: raw.iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{check_feasibility, LinearExpression, VariableDef};

    fn x_model(sense: ObjectiveSense) -> LinearModel {
        let mut m = LinearModel::new(sense);
        m.add_variable(VariableDef::nonnegative("x")).unwrap();
        m.set_objective(LinearExpression::from_terms([("x", 1.0)])).unwrap();
        m
    }

    #[test]
    fn bounded_minimum() {
        let mut m = x_model(ObjectiveSense::Minimize);
        m.add_constraint("lo", LinearExpression::from_terms([("x", 1.0)]), RowSense::Ge, 3.0).unwrap();
        m.add_constraint("hi", LinearExpression::from_terms([("x", 1.0)]), RowSense::Le, 10.0).unwrap();
        let out = solve_lp(&m);
        assert_eq!(out.status, LpStatus::Optimal);
        assert!((out.objective - 3.0).abs() < 1e-9);
    }

    #[test]
    fn unbounded_maximum() {
        let m = x_model(ObjectiveSense::Maximize);
        assert_eq!(solve_lp(&m).status, LpStatus::Unbounded);
    }

    #[test]
    fn infeasible_rows() {
        let mut m = x_model(ObjectiveSense::Minimize);
        m.add_constraint("a", LinearExpression::from_terms([("x", 1.0)]), RowSense::Ge, 3.0).unwrap();
        m.add_constraint("b", LinearExpression::from_terms([("x", 1.0)]), RowSense::Le, 2.0).unwrap();
        assert_eq!(solve_lp(&m).status, LpStatus::Infeasible);
    }

    #[test]
    fn free_and_flipped_variables() {
        // min x - y with x free, y <= 4, x + y >= 1, x >= -2 via a row
        let mut m = LinearModel::new(ObjectiveSense::Minimize);
        m.add_variable(VariableDef::free("x")).unwrap();
        m.add_variable(VariableDef::continuous("y", f64::NEG_INFINITY, 4.0)).unwrap();
        m.set_objective(LinearExpression::from_terms([("x", 1.0), ("y", -1.0)])).unwrap();
        m.add_constraint("sum", LinearExpression::from_terms([("x", 1.0), ("y", 1.0)]), RowSense::Ge, 1.0)
            .unwrap();
        m.add_constraint("floor", LinearExpression::from_terms([("x", 1.0)]), RowSense::Ge, -2.0)
            .unwrap();
        let out = solve_lp(&m);
        assert!((out.objective + 6.0).abs() < 1e-9, "{out:?}");
        let p = out.primal.unwrap();
        assert!(check_feasibility(&m, &p, 1e-9).unwrap().is_feasible());
    }

    #[test]
    fn degenerate_equalities_with_redundant_row() {
        let mut m = LinearModel::new(ObjectiveSense::Maximize);
        for id in ["a", "b", "c"] {
            m.add_variable(VariableDef::continuous(id, 0.0, 5.0)).unwrap();
        }
        m.set_objective(LinearExpression::from_terms([("a", 1.0), ("b", 2.0), ("c", 3.0)])).unwrap();
        let e = LinearExpression::from_terms([("a", 1.0), ("b", 1.0), ("c", 1.0)]);
        m.add_constraint("r1", e.clone(), RowSense::Eq, 6.0).unwrap();
        m.add_constraint("r2", e.scaled(2.0), RowSense::Eq, 12.0).unwrap();
        let out = solve_lp(&m);
        assert!((out.objective - 17.0).abs() < 1e-9, "{out:?}");
    }

    #[test]
    fn constant_in_expression_moves_to_rhs() {
        let mut m = x_model(ObjectiveSense::Minimize);
        let e = LinearExpression::from_terms([("x", 1.0)]).with_constant(2.0);
        m.add_constraint("c", e, RowSense::Ge, 5.0).unwrap();
        assert!((solve_lp(&m).objective - 3.0).abs() < 1e-9);
    }
}
