use crate::model::{Assignment, LinearExpression, LinearModel, ObjectiveSense, RowSense, VariableDef};
use crate::solver::{solve_milp, MilpLimits, MilpOutcome};

use super::{require_valid, Schedule, ScheduleEntry, StateTaskNetwork, StnError};

pub(crate) fn var_x(task: &str, unit: &str, t: usize) -> String {
    format!("x_{task}_{unit}_{t}")
}

pub(crate) fn var_b(task: &str, unit: &str, t: usize) -> String {
    format!("b_{task}_{unit}_{t}")
}

pub(crate) fn var_y(state: &str, tau: usize) -> String {
    format!("y_{state}_{tau}")
}

pub(crate) const MAKESPAN: &str = "z";

/// Discrete-time formulation. Slot `t` in `1..=horizon` starts at time
/// `t - 1`; `y_{s}_{tau}` is the inventory of state `s` at time `tau` in
/// `0..=horizon` after that time's production and consumption. A batch
/// consumes at its start and produces `p` slots later; output landing after
/// the horizon does not count. States nothing produces are raw feeds with
/// free inventory.
pub fn build_discrete_time_model(stn: &StateTaskNetwork) -> Result<LinearModel, StnError> {
    require_valid(stn)?;
    let horizon = stn.horizon;
    let mut m = LinearModel::new(ObjectiveSense::Minimize);
    m.add_variable(VariableDef::nonnegative(MAKESPAN))?;
    for task in &stn.tasks {
        for u in &task.units {
            for t in 1..=horizon {
                m.add_variable(VariableDef::binary(var_x(&task.id, &u.unit, t)))?;
                m.add_variable(VariableDef::continuous(var_b(&task.id, &u.unit, t), 0.0, u.b.1))?;
            }
        }
    }
    for s in &stn.states {
        for tau in 0..=horizon {
            let def = if stn.is_raw(&s.id) {
                VariableDef::free(var_y(&s.id, tau))
            } else {
                VariableDef::nonnegative(var_y(&s.id, tau))
            };
            m.add_variable(def)?;
        }
    }
    m.set_objective(LinearExpression::new().with(MAKESPAN, 1.0))?;

    for task in &stn.tasks {
        for u in &task.units {
            for t in 1..=horizon {
                let x = var_x(&task.id, &u.unit, t);
                let b = var_b(&task.id, &u.unit, t);
                let finish = (t - 1) as f64 + u.p as f64;
                m.add_constraint(
                    format!("makespan_{}_{}_{t}", task.id, u.unit),
                    LinearExpression::new().with(MAKESPAN, 1.0).with(&x, -finish),
                    RowSense::Ge,
                    0.0,
                )?;
                m.add_constraint(
                    format!("batch_lo_{}_{}_{t}", task.id, u.unit),
                    LinearExpression::new().with(&b, 1.0).with(&x, -u.b.0),
                    RowSense::Ge,
                    0.0,
                )?;
                m.add_constraint(
                    format!("batch_hi_{}_{}_{t}", task.id, u.unit),
                    LinearExpression::new().with(&b, 1.0).with(&x, -u.b.1),
                    RowSense::Le,
                    0.0,
                )?;
            }
        }
    }

    for unit in stn.units() {
        for t in 1..=horizon {
            let mut e = LinearExpression::new();
            for task in &stn.tasks {
                if let Some(u) = task.units.iter().find(|u| u.unit == unit) {
                    let first = (t + 1).saturating_sub(u.p as usize).max(1);
                    for tp in first..=t {
                        e.add_term(&var_x(&task.id, &unit, tp), 1.0);
                    }
                }
            }
            m.add_constraint(format!("unit_{unit}_{t}"), e, RowSense::Le, 1.0)?;
        }
    }

    for s in &stn.states {
        for tau in 0..=horizon {
            let mut e = LinearExpression::new().with(&var_y(&s.id, tau), 1.0);
            if tau > 0 {
                e.add_term(&var_y(&s.id, tau - 1), -1.0);
            }
            for task in &stn.tasks {
                for u in &task.units {
                    if let Some(f) = task.produce.get(&s.id) {
                        let p = u.p as usize;
                        if tau >= p && tau - p < horizon {
                            e.add_term(&var_b(&task.id, &u.unit, tau - p + 1), -f);
                        }
                    }
                    if let Some(f) = task.consume.get(&s.id) {
                        if tau < horizon {
                            e.add_term(&var_b(&task.id, &u.unit, tau + 1), *f);
                        }
                    }
                }
            }
            m.add_constraint(format!("balance_{}_{tau}", s.id), e, RowSense::Eq, 0.0)?;
        }
        if s.demand > 0.0 {
            m.add_constraint(
                format!("demand_{}", s.id),
                LinearExpression::new().with(&var_y(&s.id, horizon), 1.0),
                RowSense::Ge,
                s.demand,
            )?;
        }
    }
    Ok(m)
}

/// Reads the started batches out of a discrete-time assignment.
pub fn schedule_from_discrete(stn: &StateTaskNetwork, a: &Assignment) -> Schedule {
    let mut entries = Vec::new();
    for t in 1..=stn.horizon {
        for task in &stn.tasks {
            for u in &task.units {
                if a.get(&var_x(&task.id, &u.unit, t)).unwrap_or(0.0) > 0.5 {
                    let b = a.get(&var_b(&task.id, &u.unit, t)).unwrap_or(0.0).clamp(u.b.0, u.b.1);
                    entries.push(ScheduleEntry {
                        task: task.id.clone(),
                        unit: u.unit.clone(),
                        start: (t - 1) as f64,
                        duration: u.p as f64,
                        batch: b,
                    });
                }
            }
        }
    }
    Schedule { entries }
}

/// Solves the discrete-time model exactly and extracts the schedule when
/// an incumbent exists.
pub fn solve_discrete_time(stn: &StateTaskNetwork, limits: &MilpLimits) -> Result<(MilpOutcome, Option<Schedule>), StnError> {
    let model = build_discrete_time_model(stn)?;
    let out = solve_milp(&model, limits);
    let schedule = out.primal.as_ref().map(|a| schedule_from_discrete(stn, a));
    Ok((out, schedule))
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::super::{makespan, validate_schedule};
    use super::*;
    use crate::solver::MilpStatus;

    #[test]
    fn single_task_optimum_is_its_length() {
        let stn = single_task();
        let model = build_discrete_time_model(&stn).unwrap();
        assert_eq!(model.variables().iter().filter(|v| v.is_integer()).count(), 3);
        let (out, sched) = solve_discrete_time(&stn, &MilpLimits::default()).unwrap();
        assert_eq!(out.status, MilpStatus::Optimal);
        assert!((out.objective - 2.0).abs() < 1e-6);
        let sched = sched.unwrap();
        assert!(validate_schedule(&stn, &sched, 1e-6).is_feasible());
        assert_eq!(makespan(&sched), 2.0);
    }

    #[test]
    fn chain_needs_two_slots() {
        let stn = chain();
        let (out, sched) = solve_discrete_time(&stn, &MilpLimits::default()).unwrap();
        assert!((out.objective - 2.0).abs() < 1e-6);
        assert!(validate_schedule(&stn, &sched.unwrap(), 1e-6).is_feasible());
    }

    #[test]
    fn short_horizon_is_infeasible() {
        let mut stn = chain();
        stn.horizon = 1;
        let (out, sched) = solve_discrete_time(&stn, &MilpLimits::default()).unwrap();
        assert_eq!(out.status, MilpStatus::Infeasible);
        assert!(sched.is_none());
    }

    #[test]
    fn unit_row_covers_running_batches() {
        let stn = single_task();
        let m = build_discrete_time_model(&stn).unwrap();
        let row = m.constraint("unit_u_2").unwrap();
        assert_eq!(row.expr.coefficient("x_make_u_1"), 1.0);
        assert_eq!(row.expr.coefficient("x_make_u_2"), 1.0);
        assert_eq!(row.expr.coefficient("x_make_u_3"), 0.0);
    }
}
