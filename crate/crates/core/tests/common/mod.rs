#![allow(dead_code)]

use pse_core::{LinearExpression, LinearModel, ObjectiveSense, RowSense, VariableDef};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_rows(rng: &mut ChaCha8Rng, m: &mut LinearModel, ids: &[String], point: &[f64], rows: usize) {
    for r in 0..rows {
        let mut e = LinearExpression::new();
        let mut lhs = 0.0;
        for (id, v) in ids.iter().zip(point) {
            if rng.gen_bool(0.7) {
                let c = rng.gen_range(-5..=5) as f64;
                e.add_term(id, c);
                lhs += c * v;
            }
        }
        let sense = match rng.gen_range(0..6) {
            0 => RowSense::Eq,
            1 | 2 => RowSense::Ge,
            _ => RowSense::Le,
        };
        // mostly satisfied by `point`; occasionally pushed past it
        let slack = rng.gen_range(-1.0..4.0);
        let rhs = match sense {
            RowSense::Le => lhs + slack,
            RowSense::Ge => lhs - slack,
            RowSense::Eq => lhs,
        };
        m.add_constraint(format!("r{r}"), e, sense, rhs).unwrap();
    }
}

fn random_objective(rng: &mut ChaCha8Rng, m: &mut LinearModel, ids: &[String]) {
    let mut obj = LinearExpression::new();
    for id in ids {
        obj.add_term(id, rng.gen_range(-10.0..10.0));
    }
    m.set_objective(obj).unwrap();
}

/// Bounded LP with at most 6 variables and 8 rows.
pub fn random_lp(seed: u64) -> LinearModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sense = if rng.gen_bool(0.5) { ObjectiveSense::Minimize } else { ObjectiveSense::Maximize };
    let mut m = LinearModel::new(sense);
    let n = rng.gen_range(1..=6);
    let mut ids = Vec::new();
    let mut point = Vec::new();
    for j in 0..n {
        let lo = rng.gen_range(-5.0..5.0);
        let hi = lo + rng.gen_range(0.5..10.0);
        let id = format!("x{j}");
        m.add_variable(VariableDef::continuous(id.clone(), lo, hi)).unwrap();
        point.push(rng.gen_range(lo..hi));
        ids.push(id);
    }
    let rows = rng.gen_range(0..=8);
    random_rows(&mut rng, &mut m, &ids, &point, rows);
    random_objective(&mut rng, &mut m, &ids);
    m
}

/// Mixed binary program with at most 8 binaries and 3 bounded continuous
/// variables. Returns the model and its binary ids.
pub fn random_milp(seed: u64) -> (LinearModel, Vec<String>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sense = if rng.gen_bool(0.5) { ObjectiveSense::Minimize } else { ObjectiveSense::Maximize };
    let mut m = LinearModel::new(sense);
    let nb = rng.gen_range(1..=8);
    let nc = rng.gen_range(0..=3);
    let mut ids = Vec::new();
    let mut point = Vec::new();
    let mut binaries = Vec::new();
    for j in 0..nb {
        let id = format!("b{j}");
        m.add_variable(VariableDef::binary(id.clone())).unwrap();
        point.push(rng.gen_range(0..=1) as f64);
        binaries.push(id.clone());
        ids.push(id);
    }
    for j in 0..nc {
        let id = format!("c{j}");
        let hi = rng.gen_range(1.0..10.0);
        m.add_variable(VariableDef::continuous(id.clone(), 0.0, hi)).unwrap();
        point.push(rng.gen_range(0.0..hi));
        ids.push(id);
    }
    let rows = rng.gen_range(1..=6);
    random_rows(&mut rng, &mut m, &ids, &point, rows);
    random_objective(&mut rng, &mut m, &ids);
    (m, binaries)
}

pub mod nets {
    use std::collections::BTreeMap;

    use pse_core::pooling::{Arcs, Input, Output, Pool, PoolingNetwork};

    pub fn arcs(prefix_a: &str, a: usize, prefix_b: &str, b: usize) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for x in 1..=a {
            for y in 1..=b {
                out.push((format!("{prefix_a}{x}"), format!("{prefix_b}{y}")));
            }
        }
        out
    }

    pub fn pairs(list: &[(&str, &str)]) -> Vec<(String, String)> {
        list.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
    }

    /// `inputs` inputs `i1..`, `pools` pools `l1..`, `outputs` outputs
    /// `o1..`, attributes `k1..`, with every input feeding every pool and
    /// every pool feeding every output. Each output caps each attribute.
    pub fn dense(inputs: usize, pools: usize, outputs: usize, attributes: usize) -> PoolingNetwork {
        let quality = |seed: usize| -> BTreeMap<String, f64> {
            (1..=attributes).map(|k| (format!("k{k}"), ((seed + k) % 4) as f64)).collect()
        };
        PoolingNetwork {
            inputs: (1..=inputs)
                .map(|i| Input { id: format!("i{i}"), cost: i as f64, supply: (0.0, 100.0), quality: quality(i) })
                .collect(),
            pools: (1..=pools).map(|l| Pool { id: format!("l{l}"), capacity: 100.0 }).collect(),
            outputs: (1..=outputs)
                .map(|j| Output {
                    id: format!("o{j}"),
                    profit: 5.0,
                    demand: (0.0, 100.0),
                    quality_bounds: (1..=attributes).map(|k| (format!("k{k}"), (0.0, 2.0))).collect(),
                })
                .collect(),
            arcs: Arcs { x: arcs("i", inputs, "l", pools), y: arcs("l", pools, "o", outputs), z: Vec::new() },
        }
    }
}

pub mod recipes {
    use std::collections::BTreeMap;

    use pse_core::scheduling::{State, StateTaskNetwork, Task, TaskUnit};

    fn unit(name: &str, p: u32, hi: f64) -> TaskUnit {
        TaskUnit { unit: name.into(), p, b: (0.0, hi) }
    }

    fn one(s: &str) -> BTreeMap<String, f64> {
        [(s.to_string(), 1.0)].into()
    }

    /// One task of length 2 that must make 5 units.
    pub fn single_task() -> StateTaskNetwork {
        StateTaskNetwork {
            states: vec![State { id: "s".into(), demand: 5.0 }],
            tasks: vec![Task {
                id: "make".into(),
                units: vec![unit("u", 2, 5.0)],
                consume: BTreeMap::new(),
                produce: one("s"),
                alpha: 1.0,
                beta: 0.2,
            }],
            horizon: 3,
            big_h: None,
        }
    }

    /// feed -> mid -> product on two units, one slot each.
    pub fn chain() -> StateTaskNetwork {
        StateTaskNetwork {
            states: vec![
                State { id: "feed".into(), demand: 0.0 },
                State { id: "mid".into(), demand: 0.0 },
                State { id: "product".into(), demand: 5.0 },
            ],
            tasks: vec![
                Task {
                    id: "first".into(),
                    units: vec![unit("u1", 1, 5.0)],
                    consume: one("feed"),
                    produce: one("mid"),
                    alpha: 0.0,
                    beta: 0.0,
                },
                Task {
                    id: "second".into(),
                    units: vec![unit("u2", 1, 5.0)],
                    consume: one("mid"),
                    produce: one("product"),
                    alpha: 0.0,
                    beta: 0.0,
                },
            ],
            horizon: 3,
            big_h: None,
        }
    }
}
