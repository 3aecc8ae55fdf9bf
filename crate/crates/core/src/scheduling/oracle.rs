use super::{makespan, require_valid, validate_schedule, Schedule, ScheduleEntry, StateTaskNetwork, StnError};

/// Most start decisions (task, unit, slot) the enumeration accepts.
pub const MAX_START_DECISIONS: usize = 16;

/// Exhaustive discrete-time search: every start pattern on integer slots
/// combined with every batch size on a grid of `resolution + 1` points per
/// batch window, each checked by schedule simulation. Returns the shortest
/// feasible schedule, or `None` when no combination is feasible. The result
/// is the true optimum whenever some optimal schedule uses grid batches.
pub fn enumerate_schedules_oracle(stn: &StateTaskNetwork, resolution: usize) -> Result<Option<(f64, Schedule)>, StnError> {
    require_valid(stn)?;
    let mut slots = Vec::new();
    for task in &stn.tasks {
        for u in &task.units {
            for t in 0..stn.horizon {
                if t + u.p as usize <= stn.horizon {
                    slots.push((task, u, t));
                }
            }
        }
    }
    if slots.len() > MAX_START_DECISIONS {
        return Err(StnError::TooLarge { limit: MAX_START_DECISIONS, actual: slots.len() });
    }
    let resolution = resolution.max(1);
    let mut best: Option<(f64, Schedule)> = None;
    for mask in 0u32..(1u32 << slots.len()) {
        let chosen: Vec<_> = (0..slots.len()).filter(|k| mask >> k & 1 == 1).map(|k| slots[k]).collect();
        let span = chosen.iter().map(|(_, u, t)| (*t + u.p as usize) as f64).fold(0.0, f64::max);
        if best.as_ref().is_some_and(|(b, _)| span >= *b) {
            continue;
        }
        let overlaps = chosen.iter().enumerate().any(|(a, (_, ua, ta))| {
            chosen[a + 1..].iter().any(|(_, ub, tb)| {
                ua.unit == ub.unit && *ta < *tb + ub.p as usize && *tb < *ta + ua.p as usize
            })
        });
        if overlaps {
            continue;
        }
        let mut digits = vec![0usize; chosen.len()];
        loop {
            let entries = chosen
                .iter()
                .zip(&digits)
                .map(|((task, u, t), &g)| ScheduleEntry {
                    task: task.id.clone(),
                    unit: u.unit.clone(),
                    start: *t as f64,
                    duration: u.p as f64,
                    batch: u.b.0 + (u.b.1 - u.b.0) * g as f64 / resolution as f64,
                })
                .collect();
            let schedule = Schedule { entries };
            if validate_schedule(stn, &schedule, 1e-9).is_feasible() {
                best = Some((makespan(&schedule), schedule));
                break;
            }
            let Some(pos) = digits.iter().position(|&d| d < resolution) else { break };
            for d in &mut digits[..pos] {
                *d = 0;
            }
            digits[pos] += 1;
        }
    }
    Ok(best)
}
