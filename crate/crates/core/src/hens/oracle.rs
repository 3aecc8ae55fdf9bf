use std::collections::{BTreeSet, VecDeque};

use itertools::Itertools;

use super::{HensError, TemperatureGrid};

/// Most stream pairs the subset enumeration accepts.
pub const MAX_BRUTE_FORCE_PAIRS: usize = 20;

/// Most streams per side the single-interval partition search accepts.
const MAX_PARTITION_STREAMS: usize = 16;

const TOL: f64 = 1e-9;

/// Edmonds-Karp on a dense capacity matrix.
fn max_flow(cap: &mut [Vec<f64>], source: usize, sink: usize) -> f64 {
    let n = cap.len();
    let mut total = 0.0;
    loop {
        let mut prev = vec![usize::MAX; n];
        prev[source] = source;
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            for v in 0..n {
                if prev[v] == usize::MAX && cap[u][v] > TOL {
                    prev[v] = u;
                    queue.push_back(v);
                }
            }
        }
        if prev[sink] == usize::MAX {
            return total;
        }
        let mut push = f64::INFINITY;
        let mut v = sink;
        while v != source {
            push = push.min(cap[prev[v]][v]);
            v = prev[v];
        }
        let mut v = sink;
        while v != source {
            cap[prev[v]][v] -= push;
            cap[v][prev[v]] += push;
            v = prev[v];
        }
        total += push;
    }
}

/// Whether the pairs in `open` can carry all heat downward, by max flow
/// from interval supplies to interval demands.
fn routable(grid: &TemperatureGrid, open: &[(usize, usize)]) -> bool {
    let (nh, nc, r) = (grid.hot.len(), grid.cold.len(), grid.intervals());
    let hot_node = |i: usize, s: usize| 2 + i * r + s;
    let cold_node = |j: usize, t: usize| 2 + nh * r + j * r + t;
    let n = 2 + (nh + nc) * r;
    let mut cap = vec![vec![0.0; n]; n];
    for i in 0..nh {
        for s in 0..r {
            cap[0][hot_node(i, s)] = grid.sigma[i][s];
        }
    }
    for j in 0..nc {
        for t in 0..r {
            cap[cold_node(j, t)][1] = grid.delta[j][t];
        }
    }
    for &(i, j) in open {
        for s in 0..r {
            for t in s..r {
                cap[hot_node(i, s)][cold_node(j, t)] = f64::INFINITY;
            }
        }
    }
    let need = grid.total_supply();
    max_flow(&mut cap, 0, 1) >= need - 1e-7 * need.max(1.0)
}

/// Fewest matches by enumerating pair subsets in increasing size, each
/// checked by max flow. `None` when even all pairs cannot route the heat.
pub fn brute_force_min_matches(grid: &TemperatureGrid) -> Result<Option<(usize, BTreeSet<(usize, usize)>)>, HensError> {
    let hot: Vec<usize> = (0..grid.hot.len()).filter(|&i| grid.hot_load(i) > TOL).collect();
    let cold: Vec<usize> = (0..grid.cold.len()).filter(|&j| grid.cold_load(j) > TOL).collect();
    let pairs: Vec<(usize, usize)> = hot.iter().flat_map(|&i| cold.iter().map(move |&j| (i, j))).collect();
    if pairs.len() > MAX_BRUTE_FORCE_PAIRS {
        return Err(HensError::TooLarge { limit: MAX_BRUTE_FORCE_PAIRS, actual: pairs.len() });
    }
    if pairs.is_empty() {
        return Ok((grid.total_supply() <= TOL && grid.total_demand() <= TOL).then(|| (0, BTreeSet::new())));
    }
    let start = hot.len().max(cold.len());
    for k in start..=pairs.len() {
        for subset in pairs.iter().copied().combinations(k) {
            let covers = hot.iter().all(|i| subset.iter().any(|p| p.0 == *i))
                && cold.iter().all(|j| subset.iter().any(|p| p.1 == *j));
            if covers && routable(grid, &subset) {
                return Ok(Some((k, subset.into_iter().collect())));
            }
        }
    }
    Ok(None)
}

/// Exact optimum for a single interval: components of the match graph must
/// balance, and a balanced component of `n` streams needs `n - 1` matches,
/// so the answer is the stream count minus the most balanced blocks the
/// streams can be split into.
pub fn single_interval_optimum(grid: &TemperatureGrid) -> Result<usize, HensError> {
    if grid.intervals() != 1 {
        return Err(HensError::NotSingleInterval(grid.intervals()));
    }
    let loads: Vec<f64> = grid
        .sigma
        .iter()
        .map(|s| s[0])
        .chain(grid.delta.iter().map(|d| -d[0]))
        .filter(|v| v.abs() > TOL)
        .collect();
    let n = loads.len();
    if n > MAX_PARTITION_STREAMS {
        return Err(HensError::TooLarge { limit: MAX_PARTITION_STREAMS, actual: n });
    }
    let scale = loads.iter().map(|v| v.abs()).fold(1.0, f64::max);
    let mut sum = vec![0.0; 1 << n];
    let mut blocks = vec![0usize; 1 << n];
    for mask in 1usize..1 << n {
        let low = mask.trailing_zeros() as usize;
        sum[mask] = sum[mask & (mask - 1)] + loads[low];
        let best = (0..n).filter(|b| mask >> b & 1 == 1).map(|b| blocks[mask ^ (1 << b)]).max().unwrap_or(0);
        blocks[mask] = best + usize::from(sum[mask].abs() <= 1e-9 * scale);
    }
    Ok(n - blocks[(1 << n) - 1])
}
