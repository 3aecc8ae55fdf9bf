use crate::model::{LinearExpression, LinearModel, ObjectiveSense, RowSense, VariableDef};

use super::{require_valid, StateTaskNetwork, StnError};

/// Time horizon used when the network does not set one: every task run
/// once at its largest batch, back to back.
pub fn default_big_h(stn: &StateTaskNetwork) -> f64 {
    stn.tasks
        .iter()
        .map(|t| {
            let b = t.units.iter().map(|u| u.b.1).fold(0.0, f64::max);
            t.alpha + t.beta * b
        })
        .sum::<f64>()
        .max(1.0)
}

fn lin(terms: &[(&str, f64)]) -> LinearExpression {
    LinearExpression::from_terms(terms.iter().map(|(v, c)| (v.to_string(), *c)))
}

/// Continuous-time formulation over `horizon` event points. Each task runs
/// on a single unit; batches take `alpha * xs + beta * b` time. Start and
/// finish indicators tie task times to event times through big-H rows.
/// Inventories start empty: point 1 only sees consumption.
pub fn build_continuous_time_model(stn: &StateTaskNetwork) -> Result<LinearModel, StnError> {
    require_valid(stn)?;
    if let Some(t) = stn.tasks.iter().find(|t| t.units.len() > 1) {
        return Err(StnError::MultiUnitTask(t.id.clone()));
    }
    let big_h = stn.big_h.unwrap_or_else(|| default_big_h(stn));
    let points = stn.horizon;
    let tp = |k: usize| format!("t_{k}");
    let mut m = LinearModel::new(ObjectiveSense::Minimize);
    m.add_variable(VariableDef::nonnegative("z"))?;
    for k in 1..=points {
        m.add_variable(VariableDef::continuous(tp(k), 0.0, big_h))?;
    }
    for task in &stn.tasks {
        let u = &task.units[0];
        let pmax = task.alpha + task.beta * u.b.1;
        for k in 1..=points {
            let i = &task.id;
            m.add_variable(VariableDef::binary(format!("xs_{i}_{k}")))?;
            m.add_variable(VariableDef::binary(format!("xf_{i}_{k}")))?;
            m.add_variable(VariableDef::continuous(format!("ts_{i}_{k}"), 0.0, big_h))?;
            m.add_variable(VariableDef::continuous(format!("tf_{i}_{k}"), 0.0, big_h))?;
            m.add_variable(VariableDef::continuous(format!("p_{i}_{k}"), 0.0, pmax))?;
            m.add_variable(VariableDef::continuous(format!("b_{i}_{k}"), 0.0, u.b.1))?;
        }
    }
    for s in &stn.states {
        for k in 1..=points {
            let id = format!("y_{}_{k}", s.id);
            m.add_variable(if stn.is_raw(&s.id) { VariableDef::free(id) } else { VariableDef::nonnegative(id) })?;
        }
    }
    m.set_objective(lin(&[("z", 1.0)]))?;

    m.add_constraint("t_first", lin(&[(&tp(1), 1.0)]), RowSense::Eq, 0.0)?;
    m.add_constraint("t_last", lin(&[(&tp(points), 1.0)]), RowSense::Eq, big_h)?;
    for k in 2..=points {
        m.add_constraint(format!("order_{k}"), lin(&[(&tp(k - 1), 1.0), (&tp(k), -1.0)]), RowSense::Le, 0.0)?;
    }

    for task in &stn.tasks {
        let i = &task.id;
        let u = &task.units[0];
        let mut balance = LinearExpression::new();
        for k in 1..=points {
            let xs = format!("xs_{i}_{k}");
            let xf = format!("xf_{i}_{k}");
            let ts = format!("ts_{i}_{k}");
            let tf = format!("tf_{i}_{k}");
            let p = format!("p_{i}_{k}");
            let b = format!("b_{i}_{k}");
            let t = tp(k);
            balance.add_term(&xs, 1.0);
            balance.add_term(&xf, -1.0);
            m.add_constraint(format!("makespan_{i}_{k}"), lin(&[("z", 1.0), (&ts, -1.0), (&p, -1.0)]), RowSense::Ge, 0.0)?;
            m.add_constraint(
                format!("duration_{i}_{k}"),
                lin(&[(&p, 1.0), (&xs, -task.alpha), (&b, -task.beta)]),
                RowSense::Eq,
                0.0,
            )?;
            m.add_constraint(format!("start_hi_{i}_{k}"), lin(&[(&ts, 1.0), (&t, -1.0), (&xs, big_h)]), RowSense::Le, big_h)?;
            m.add_constraint(format!("start_lo_{i}_{k}"), lin(&[(&ts, 1.0), (&t, -1.0), (&xs, -big_h)]), RowSense::Ge, -big_h)?;
            m.add_constraint(
                format!("finish_hi_{i}_{k}"),
                lin(&[(&tf, 1.0), (&t, -1.0), (&p, -1.0), (&xs, big_h)]),
                RowSense::Le,
                big_h,
            )?;
            m.add_constraint(
                format!("finish_lo_{i}_{k}"),
                lin(&[(&tf, 1.0), (&t, -1.0), (&p, -1.0), (&xs, -big_h)]),
                RowSense::Ge,
                -big_h,
            )?;
            if k > 1 {
                let tf_prev = format!("tf_{i}_{}", k - 1);
                m.add_constraint(
                    format!("finish_hold_{i}_{k}"),
                    lin(&[(&tf, 1.0), (&tf_prev, -1.0), (&xs, -big_h)]),
                    RowSense::Le,
                    0.0,
                )?;
                m.add_constraint(
                    format!("end_hi_{i}_{k}"),
                    lin(&[(&tf_prev, 1.0), (&t, -1.0), (&xf, big_h)]),
                    RowSense::Le,
                    big_h,
                )?;
                m.add_constraint(
                    format!("end_lo_{i}_{k}"),
                    lin(&[(&tf_prev, 1.0), (&t, -1.0), (&xf, -big_h)]),
                    RowSense::Ge,
                    -big_h,
                )?;
            }
            m.add_constraint(format!("batch_lo_{i}_{k}"), lin(&[(&b, 1.0), (&xs, -u.b.0)]), RowSense::Ge, 0.0)?;
            m.add_constraint(format!("batch_hi_{i}_{k}"), lin(&[(&b, 1.0), (&xs, -u.b.1)]), RowSense::Le, 0.0)?;
        }
        m.add_constraint(format!("complete_{i}"), balance, RowSense::Eq, 0.0)?;
    }

    for unit in stn.units() {
        let tasks: Vec<&str> = stn.tasks.iter().filter(|t| t.units[0].unit == unit).map(|t| t.id.as_str()).collect();
        for k in 1..=points {
            let mut e = LinearExpression::new();
            for i in &tasks {
                for kp in 1..=k {
                    e.add_term(&format!("xs_{i}_{kp}"), 1.0);
                    e.add_term(&format!("xf_{i}_{kp}"), -1.0);
                }
            }
            m.add_constraint(format!("unit_{unit}_{k}"), e, RowSense::Le, 1.0)?;
        }
    }

    for s in &stn.states {
        for k in 1..=points {
            let mut e = lin(&[(&format!("y_{}_{k}", s.id), 1.0)]);
            if k > 1 {
                e.add_term(&format!("y_{}_{}", s.id, k - 1), -1.0);
            }
            for task in &stn.tasks {
                if let (Some(f), true) = (task.produce.get(&s.id), k > 1) {
                    e.add_term(&format!("b_{}_{}", task.id, k - 1), -f);
                }
                if let Some(f) = task.consume.get(&s.id) {
                    e.add_term(&format!("b_{}_{k}", task.id), *f);
                }
            }
            m.add_constraint(format!("balance_{}_{k}", s.id), e, RowSense::Eq, 0.0)?;
        }
        if s.demand > 0.0 {
            m.add_constraint(
                format!("demand_{}", s.id),
                lin(&[(&format!("y_{}_{points}", s.id), 1.0)]),
                RowSense::Ge,
                s.demand,
            )?;
        }
    }
    Ok(m)
}
