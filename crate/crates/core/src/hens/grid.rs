use crate::model::{LinearExpression, LinearModel, ObjectiveSense, RowSense, VariableDef};
use crate::solver::{solve_lp, LpStatus};

use super::{require_valid, HensError, HensInstance};

pub const HOT_UTILITY: &str = "hot_utility";
pub const COLD_UTILITY: &str = "cold_utility";

const MERGE_TOL: f64 = 1e-9;

/// Temperature boundaries `T_0 > T_1 > ... > T_r` with interval heats:
/// `sigma[i][t]` supplied by hot stream `i` and `delta[j][t]` demanded by
/// cold stream `j` in interval `t` (between `T_{t+1}` and `T_t`, indexed from
/// the top). Hot temperatures are already shifted down by the minimum
/// approach temperature.
#[derive(Debug, Clone, PartialEq)]
pub struct TemperatureGrid {
    pub boundaries: Vec<f64>,
    pub hot: Vec<String>,
    pub cold: Vec<String>,
    pub sigma: Vec<Vec<f64>>,
    pub delta: Vec<Vec<f64>>,
}

impl TemperatureGrid {
    pub fn intervals(&self) -> usize {
        self.boundaries.len().saturating_sub(1)
    }

    pub fn hot_load(&self, i: usize) -> f64 {
        self.sigma[i].iter().sum()
    }

    pub fn cold_load(&self, j: usize) -> f64 {
        self.delta[j].iter().sum()
    }

    pub fn total_supply(&self) -> f64 {
        self.sigma.iter().flatten().sum()
    }

    pub fn total_demand(&self) -> f64 {
        self.delta.iter().flatten().sum()
    }

    pub fn is_balanced(&self) -> bool {
        let (s, d) = (self.total_supply(), self.total_demand());
        (s - d).abs() <= 1e-9 * s.abs().max(d.abs()).max(1.0)
    }

    /// Cumulative surplus after each interval, top-down.
    pub fn residuals(&self) -> Vec<f64> {
        let mut r = 0.0;
        (0..self.intervals())
            .map(|t| {
                r += self.sigma.iter().map(|s| s[t]).sum::<f64>() - self.delta.iter().map(|d| d[t]).sum::<f64>();
                r
            })
            .collect()
    }
}

fn heat_in(range_lo: f64, range_hi: f64, top: f64, bottom: f64, f: f64) -> f64 {
    if bottom >= range_lo - MERGE_TOL && top <= range_hi + MERGE_TOL {
        f * (top - bottom)
    } else {
        0.0
    }
}

pub fn build_temperature_intervals(inst: &HensInstance) -> Result<TemperatureGrid, HensError> {
    require_valid(inst)?;
    let shift = inst.dt_min;
    let mut temps: Vec<f64> = inst
        .hot
        .iter()
        .flat_map(|s| [s.t_in - shift, s.t_out - shift])
        .chain(inst.cold.iter().flat_map(|s| [s.t_in, s.t_out]))
        .collect();
    temps.sort_by(|a, b| b.total_cmp(a));
    temps.dedup_by(|a, b| (*a - *b).abs() <= MERGE_TOL);
    let r = temps.len().saturating_sub(1);
    let sigma = inst
        .hot
        .iter()
        .map(|s| (0..r).map(|t| heat_in(s.t_out - shift, s.t_in - shift, temps[t], temps[t + 1], s.f)).collect())
        .collect();
    let delta = inst
        .cold
        .iter()
        .map(|s| (0..r).map(|t| heat_in(s.t_in, s.t_out, temps[t], temps[t + 1], s.f)).collect())
        .collect();
    Ok(TemperatureGrid {
        boundaries: temps,
        hot: inst.hot.iter().map(|s| s.id.clone()).collect(),
        cold: inst.cold.iter().map(|s| s.id.clone()).collect(),
        sigma,
        delta,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtilityTargets {
    pub hot_utility: f64,
    pub cold_utility: f64,
    pub cost: f64,
}

/// Top-down heat cascade: the hot utility covers the largest cumulative
/// deficit and the cold utility takes whatever reaches the bottom.
pub fn min_utility_cascade(inst: &HensInstance) -> Result<UtilityTargets, HensError> {
    let grid = build_temperature_intervals(inst)?;
    let res = grid.residuals();
    let hot_utility = (-res.iter().copied().fold(0.0, f64::min)).max(0.0);
    let cold_utility = (res.last().copied().unwrap_or(0.0) + hot_utility).max(0.0);
    Ok(UtilityTargets { hot_utility, cold_utility, cost: inst.cost_hu * hot_utility + inst.cost_cu * cold_utility })
}

/// Transshipment LP: residual heat `R_t >= 0` passes from each interval to
/// the next, the hot utility enters at the top and the cold utility leaves
/// at the bottom.
pub fn min_utility_lp(inst: &HensInstance) -> Result<UtilityTargets, HensError> {
    let grid = build_temperature_intervals(inst)?;
    let r = grid.intervals();
    let mut m = LinearModel::new(ObjectiveSense::Minimize);
    m.add_variable(VariableDef::nonnegative("qhu"))?;
    m.add_variable(VariableDef::nonnegative("qcu"))?;
    for t in 1..r {
        m.add_variable(VariableDef::nonnegative(format!("r_{t}")))?;
    }
    m.set_objective(LinearExpression::new().with("qhu", inst.cost_hu).with("qcu", inst.cost_cu))?;
    let carry = |t: usize| -> String {
        if t == 0 {
            "qhu".into()
        } else if t == r {
            "qcu".into()
        } else {
            format!("r_{t}")
        }
    };
    for t in 0..r {
        let surplus: f64 =
            grid.sigma.iter().map(|s| s[t]).sum::<f64>() - grid.delta.iter().map(|d| d[t]).sum::<f64>();
        let e = LinearExpression::new().with(&carry(t), 1.0).with(&carry(t + 1), -1.0);
        m.add_constraint(format!("interval_{t}"), e, RowSense::Eq, -surplus)?;
    }
    if r == 0 {
        m.add_constraint("no_heat", LinearExpression::new().with("qhu", 1.0).with("qcu", -1.0), RowSense::Eq, 0.0)?;
    }
    let out = solve_lp(&m);
    let a = match (out.status, out.primal) {
        (LpStatus::Optimal, Some(a)) => a,
        (status, _) => unreachable!("transshipment LP is always feasible and bounded, got {status:?}"),
    };
    Ok(UtilityTargets {
        hot_utility: a.get("qhu").unwrap_or(0.0),
        cold_utility: a.get("qcu").unwrap_or(0.0),
        cost: out.objective,
    })
}

/// Utility cost implied by the aggregate energy balance alone.
pub fn utility_energy_lower_bound(inst: &HensInstance) -> f64 {
    let (h, c) = (inst.total_hot_load(), inst.total_cold_load());
    inst.cost_hu * (c - h).max(0.0) + inst.cost_cu * (h - c).max(0.0)
}

/// Adds the cascade's hot utility as a stream supplying the top interval and
/// the cold utility as a stream absorbing in the bottom interval, which
/// makes the grid balanced and routable.
pub fn embed_utilities(grid: &mut TemperatureGrid, targets: &UtilityTargets) {
    let r = grid.intervals();
    if r == 0 {
        return;
    }
    if targets.hot_utility > MERGE_TOL {
        let mut row = vec![0.0; r];
        row[0] = targets.hot_utility;
        grid.hot.push(HOT_UTILITY.into());
        grid.sigma.push(row);
    }
    if targets.cold_utility > MERGE_TOL {
        let mut row = vec![0.0; r];
        row[r - 1] = targets.cold_utility;
        grid.cold.push(COLD_UTILITY.into());
        grid.delta.push(row);
    }
}

/// Grid for the minimum number of matches problem: intervals plus utility
/// streams sized by the cascade.
pub fn match_grid(inst: &HensInstance) -> Result<TemperatureGrid, HensError> {
    let mut grid = build_temperature_intervals(inst)?;
    let targets = min_utility_cascade(inst)?;
    embed_utilities(&mut grid, &targets);
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::super::Stream;
    use super::*;

    #[test]
    fn worked_interval_example() {
        let g = build_temperature_intervals(&pair(2.0, 2.0)).unwrap();
        assert_eq!(g.boundaries, vec![150.0, 140.0, 50.0, 40.0]);
        assert_eq!(g.sigma[0], vec![20.0, 180.0, 0.0]);
        assert_eq!(g.delta[0], vec![0.0, 180.0, 20.0]);
    }

    #[test]
    fn approach_temperature_shifts_hot_side() {
        let mut inst = pair(2.0, 2.0);
        inst.dt_min = 10.0;
        let g = build_temperature_intervals(&inst).unwrap();
        assert_eq!(g.boundaries, vec![140.0, 40.0]);
        assert_eq!(g.sigma[0], vec![200.0]);
    }

    #[test]
    fn cascade_examples() {
        let t = min_utility_cascade(&pair(2.0, 2.0)).unwrap();
        assert_eq!((t.hot_utility, t.cold_utility), (0.0, 0.0));
        let short = HensInstance::new(vec![Stream::new("h", 150.0, 50.0, 2.0)], vec![Stream::new("c", 40.0, 160.0, 2.0)]);
        let t = min_utility_cascade(&short).unwrap();
        assert!((t.hot_utility - 40.0).abs() < 1e-9 && t.cold_utility.abs() < 1e-9);
        let lp = min_utility_lp(&short).unwrap();
        assert!((lp.cost - t.cost).abs() < 1e-9);
        let only_hot = HensInstance::new(vec![Stream::new("h", 150.0, 50.0, 2.0)], vec![]);
        let t = min_utility_cascade(&only_hot).unwrap();
        assert_eq!((t.hot_utility, t.cold_utility), (0.0, 200.0));
    }

    #[test]
    fn energy_bound_examples() {
        assert_eq!(utility_energy_lower_bound(&pair(2.0, 2.0)), 0.0);
        let short = HensInstance::new(vec![Stream::new("h", 150.0, 50.0, 2.0)], vec![Stream::new("c", 40.0, 160.0, 2.0)]);
        assert_eq!(utility_energy_lower_bound(&short), 40.0);
    }

    #[test]
    fn embedded_grid_balances() {
        let inst = HensInstance::new(vec![Stream::new("h", 100.0, 50.0, 1.0)], vec![Stream::new("c", 60.0, 120.0, 1.0)]);
        let g = match_grid(&inst).unwrap();
        assert!(g.is_balanced());
        assert_eq!(g.hot.last().unwrap(), HOT_UTILITY);
        assert_eq!(g.cold.last().unwrap(), COLD_UTILITY);
    }
}
