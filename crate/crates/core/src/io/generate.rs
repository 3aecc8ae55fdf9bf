use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::hens::{min_utility_cascade, HensInstance, Stream};
use crate::pooling::{Arcs, Input, Output, Pool, PoolingNetwork};
use crate::scheduling::{State, StateTaskNetwork, Task, TaskUnit};

use super::{Instance, InstanceEnvelope, IoError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PoolingShape {
    pub inputs: usize,
    pub pools: usize,
    pub outputs: usize,
    pub attributes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StnShape {
    pub tasks: usize,
    pub units: usize,
    pub horizon: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HensShape {
    pub hot: usize,
    pub cold: usize,
    /// Upper limit on temperature intervals; only enforced for balanced
    /// instances.
    pub intervals: usize,
    /// Equal total hot and cold loads that route without utilities.
    pub balanced: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenSpec {
    Pooling(PoolingShape),
    Stn(StnShape),
    Hens(HensShape),
    /// Balanced streams sharing one temperature interval.
    SingleInterval { hot: usize, cold: usize },
}

fn check(ok: bool, msg: &str) -> Result<(), IoError> {
    if ok {
        Ok(())
    } else {
        Err(IoError::BadParams(msg.into()))
    }
}

/// Deterministic random instance for `spec` and `seed`.
pub fn generate(spec: &GenSpec, seed: u64) -> Result<InstanceEnvelope, IoError> {
    let instance = match *spec {
        GenSpec::Pooling(shape) => Instance::Pooling(random_pooling(seed, shape)?),
        GenSpec::Stn(shape) => Instance::Stn(random_stn(seed, shape)?),
        GenSpec::Hens(shape) => Instance::Hens(random_hens(seed, shape)?),
        GenSpec::SingleInterval { hot, cold } => Instance::Hens(random_single_interval(seed, hot, cold)?),
    };
    Ok(InstanceEnvelope::new(instance))
}

fn tenths(rng: &mut ChaCha8Rng, lo: u32, hi: u32) -> f64 {
    rng.gen_range(lo..=hi) as f64 / 10.0
}

/// Pooling network with zero lower bounds, so the empty flow is always
/// feasible. Every pool gets at least one feeder and one outlet.
pub fn random_pooling(seed: u64, shape: PoolingShape) -> Result<PoolingNetwork, IoError> {
    check((1..=8).contains(&shape.inputs), "pooling inputs must be in 1..=8")?;
    check(shape.pools <= 4, "pooling pools must be at most 4")?;
    check((1..=6).contains(&shape.outputs), "pooling outputs must be in 1..=6")?;
    check(shape.attributes <= 3, "pooling attributes must be at most 3")?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let attrs: Vec<String> = (1..=shape.attributes).map(|k| format!("q{k}")).collect();
    let inputs: Vec<Input> = (1..=shape.inputs)
        .map(|i| Input {
            id: format!("in{i}"),
            cost: rng.gen_range(1..=15) as f64,
            supply: (0.0, 10.0 * rng.gen_range(5..=15) as f64),
            quality: attrs.iter().map(|k| (k.clone(), tenths(&mut rng, 0, 50))).collect(),
        })
        .collect();
    let pools: Vec<Pool> = (1..=shape.pools)
        .map(|l| Pool {
            id: format!("pool{l}"),
            capacity: if rng.gen_bool(0.2) { f64::INFINITY } else { 10.0 * rng.gen_range(5..=20) as f64 },
        })
        .collect();
    let outputs: Vec<Output> = (1..=shape.outputs)
        .map(|j| {
            let quality_bounds: BTreeMap<String, (f64, f64)> = attrs
                .iter()
                .map(|k| {
                    let qs: Vec<f64> = inputs.iter().map(|i| i.quality[k]).collect();
                    let lo = qs.iter().copied().fold(f64::INFINITY, f64::min);
                    let hi = qs.iter().copied().fold(0.0, f64::max);
                    let upper = lo + (hi - lo) * rng.gen_range(0.3..=0.9);
                    let upper = (upper * 10.0).round() / 10.0;
                    let lower = if rng.gen_bool(0.2) { (lo * 10.0).floor() / 10.0 } else { 0.0 };
                    (k.clone(), (lower.min(upper), upper))
                })
                .collect();
            Output {
                id: format!("out{j}"),
                profit: rng.gen_range(5..=20) as f64,
                demand: (0.0, 10.0 * rng.gen_range(5..=15) as f64),
                quality_bounds,
            }
        })
        .collect();
    let mut arcs = Arcs::default();
    for l in &pools {
        let mut feeders: Vec<usize> = (0..inputs.len()).filter(|_| rng.gen_bool(0.6)).collect();
        if feeders.is_empty() {
            feeders.push(rng.gen_range(0..inputs.len()));
        }
        for i in feeders {
            arcs.x.push((inputs[i].id.clone(), l.id.clone()));
        }
        let mut outlets: Vec<usize> = (0..outputs.len()).filter(|_| rng.gen_bool(0.7)).collect();
        if outlets.is_empty() {
            outlets.push(rng.gen_range(0..outputs.len()));
        }
        for j in outlets {
            arcs.y.push((l.id.clone(), outputs[j].id.clone()));
        }
    }
    for i in &inputs {
        for j in &outputs {
            if pools.is_empty() || rng.gen_bool(0.3) {
                arcs.z.push((i.id.clone(), j.id.clone()));
            }
        }
    }
    Ok(PoolingNetwork { inputs, pools, outputs, arcs })
}

/// Production line: task `k` turns state `s{k-1}` (plus, sometimes, an
/// earlier state) into `s{k}`; `s0` is the raw feed and the last state
/// carries the demand.
pub fn random_stn(seed: u64, shape: StnShape) -> Result<StateTaskNetwork, IoError> {
    check((1..=6).contains(&shape.tasks), "stn tasks must be in 1..=6")?;
    check((1..=4).contains(&shape.units), "stn units must be in 1..=4")?;
    check((1..=24).contains(&shape.horizon), "stn horizon must be in 1..=24")?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = shape.tasks;
    let mut tasks = Vec::with_capacity(n);
    let mut smallest_batch = f64::INFINITY;
    for k in 1..=n {
        let mut consume = BTreeMap::new();
        if k >= 3 && rng.gen_bool(0.3) {
            let extra = rng.gen_range(0..k - 1);
            consume.insert(format!("s{extra}"), 0.5);
            consume.insert(format!("s{}", k - 1), 0.5);
        } else {
            consume.insert(format!("s{}", k - 1), 1.0);
        }
        let eligible = if shape.units > 1 && rng.gen_bool(0.3) { 2 } else { 1 };
        let units: Vec<TaskUnit> = sample(&mut rng, shape.units, eligible)
            .into_vec()
            .into_iter()
            .map(|u| {
                let hi = rng.gen_range(5..=10) as f64;
                smallest_batch = smallest_batch.min(hi);
                TaskUnit { unit: format!("u{}", u + 1), p: rng.gen_range(1..=2), b: (0.0, hi) }
            })
            .collect();
        let mut units = units;
        units.sort_by(|a, b| a.unit.cmp(&b.unit));
        tasks.push(Task {
            id: format!("t{k}"),
            units,
            consume,
            produce: [(format!("s{k}"), 1.0)].into(),
            alpha: rng.gen_range(1..=3) as f64,
            beta: tenths(&mut rng, 1, 5),
        });
    }
    let mut states: Vec<State> = (0..=n).map(|s| State { id: format!("s{s}"), demand: 0.0 }).collect();
    states[n].demand = rng.gen_range(1..=smallest_batch as u32) as f64;
    Ok(StateTaskNetwork { states, tasks, horizon: shape.horizon, big_h: None })
}

fn levels(rng: &mut ChaCha8Rng, count: usize) -> Vec<f64> {
    let mut lv: Vec<f64> = sample(rng, 24, count).into_iter().map(|v| 20.0 + 10.0 * v as f64).collect();
    lv.sort_by(f64::total_cmp);
    lv
}

fn span(rng: &mut ChaCha8Rng, lv: &[f64]) -> (f64, f64) {
    let mut pick = sample(rng, lv.len(), 2).into_vec();
    pick.sort_unstable();
    (lv[pick[0]], lv[pick[1]])
}

/// Heat exchanger instance. Balanced instances draw all temperatures from
/// `intervals + 1` levels, size the last cold stream to match the hot load
/// exactly, and are redrawn until they need no utilities.
pub fn random_hens(seed: u64, shape: HensShape) -> Result<HensInstance, IoError> {
    check(shape.hot <= 8 && shape.cold <= 8, "hens streams per side must be at most 8")?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if !shape.balanced {
        let mut stream = |prefix: &str, n: usize, hot: bool| -> Vec<Stream> {
            (1..=n)
                .map(|k| {
                    let a = 5.0 * rng.gen_range(4..=50) as f64;
                    let b = a + 5.0 * rng.gen_range(1..=20) as f64;
                    let f = 0.5 * rng.gen_range(2..=10) as f64;
                    if hot {
                        Stream::new(format!("{prefix}{k}"), b, a, f)
                    } else {
                        Stream::new(format!("{prefix}{k}"), a, b, f)
                    }
                })
                .collect()
        };
        let hot = stream("h", shape.hot, true);
        let cold = stream("c", shape.cold, false);
        let mut inst = HensInstance::new(hot, cold);
        inst.dt_min = if rng.gen_bool(0.5) { 0.0 } else { 10.0 };
        inst.cost_hu = rng.gen_range(1..=5) as f64;
        inst.cost_cu = rng.gen_range(1..=3) as f64;
        return Ok(inst);
    }
    check(shape.hot >= 1 && shape.cold >= 1, "balanced hens instances need streams on both sides")?;
    check((1..=6).contains(&shape.intervals), "hens intervals must be in 1..=6")?;
    for _ in 0..10_000 {
        let lv = levels(&mut rng, shape.intervals + 1);
        let hot: Vec<Stream> = (1..=shape.hot)
            .map(|k| {
                let (lo, hi) = span(&mut rng, &lv);
                Stream::new(format!("h{k}"), hi, lo, rng.gen_range(1..=6) as f64)
            })
            .collect();
        let mut cold: Vec<Stream> = (1..shape.cold)
            .map(|k| {
                let (lo, hi) = span(&mut rng, &lv);
                Stream::new(format!("c{k}"), lo, hi, rng.gen_range(1..=6) as f64)
            })
            .collect();
        let rest = hot.iter().map(Stream::load).sum::<f64>() - cold.iter().map(Stream::load).sum::<f64>();
        if rest <= 0.0 {
            continue;
        }
        let fits: Vec<(f64, f64)> = (0..lv.len())
            .flat_map(|a| (a + 1..lv.len()).map(move |b| (a, b)))
            .map(|(a, b)| (lv[a], lv[b]))
            .filter(|(lo, hi)| rest % (hi - lo) == 0.0)
            .collect();
        if fits.is_empty() {
            continue;
        }
        let (lo, hi) = fits[rng.gen_range(0..fits.len())];
        cold.push(Stream::new(format!("c{}", shape.cold), lo, hi, rest / (hi - lo)));
        let inst = HensInstance::new(hot, cold);
        let targets = min_utility_cascade(&inst).map_err(|e| IoError::BadParams(e.to_string()))?;
        if targets.hot_utility == 0.0 && targets.cold_utility == 0.0 {
            return Ok(inst);
        }
    }
    Err(IoError::BadParams("no balanced instance found for this shape".into()))
}

/// Hot streams `101 -> 100` and cold streams `100 -> 101` with integer loads
/// of equal total, so every stream lives in the single interval.
pub fn random_single_interval(seed: u64, hot: usize, cold: usize) -> Result<HensInstance, IoError> {
    check((1..=8).contains(&hot) && (1..=8).contains(&cold), "single-interval streams per side must be in 1..=8")?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hot_loads: Vec<u32> = loop {
        let loads: Vec<u32> = (0..hot).map(|_| rng.gen_range(1..=10)).collect();
        if loads.iter().sum::<u32>() as usize >= cold {
            break loads;
        }
    };
    let total: u32 = hot_loads.iter().sum();
    let mut cuts: Vec<u32> = sample(&mut rng, total as usize - 1, cold - 1).into_iter().map(|c| c as u32 + 1).collect();
    cuts.sort_unstable();
    cuts.push(total);
    let mut prev = 0;
    let cold_loads: Vec<u32> = cuts
        .into_iter()
        .map(|c| {
            let l = c - prev;
            prev = c;
            l
        })
        .collect();
    Ok(HensInstance::new(
        hot_loads.iter().enumerate().map(|(k, &l)| Stream::new(format!("h{}", k + 1), 101.0, 100.0, l as f64)).collect(),
        cold_loads.iter().enumerate().map(|(k, &l)| Stream::new(format!("c{}", k + 1), 100.0, 101.0, l as f64)).collect(),
    ))
}
