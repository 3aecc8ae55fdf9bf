use std::fmt;

use super::PoolingNetwork;

/// Default threshold for the "bounded by a constant" cardinality rows.
pub const DEFAULT_KAPPA: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ComplexityClass {
    Polynomial,
    NpHard,
    WeaklyNpHard,
    StronglyNpHard,
}

impl fmt::Display for ComplexityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ComplexityClass::Polynomial => "P",
            ComplexityClass::NpHard => "NP-hard",
            ComplexityClass::WeaklyNpHard => "weakly NP-hard",
            ComplexityClass::StronglyNpHard => "strongly NP-hard",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Classification {
    pub class: ComplexityClass,
    /// Stable identifier of the first matching rule.
    pub rule: &'static str,
}

/// Matches the network against the known complexity results, polynomial
/// cases first. Rules, in priority order:
///
/// | rule | condition | class |
/// |---|---|---|
/// | `no-quality` | no output restricts any attribute | P |
/// | `no-pools` | `L` empty | P |
/// | `single-input` | `|I| = 1` | P |
/// | `single-output` | `|J| = 1` | P |
/// | `pool-degree-one` | every pool has in- or out-degree 1 | P |
/// | `single-pool-few-inputs` | `|L| = 1`, `Z` empty, `|I| <= kappa` | P |
/// | `single-pool-few-outputs` | `|L| = 1`, `Z` empty, `|J| <= kappa` | P |
/// | `single-pool-few-attributes` | `|L| = 1`, `Z` empty, `|K| <= kappa` | P |
/// | `single-pool-fixed-demand` | `|L| = |K| = 1`, free supplies, infinite capacity, fixed demands | P |
/// | `single-pool-no-bypass` | `|L| = 1`, `Z` empty | strongly NP-hard |
/// | `two-by-two-single-attribute` | `|I| = |J| = 2`, `|K| = 1` | weakly NP-hard |
/// | `two-inputs-single-attribute` | `|I| = 2`, `|K| = 1` | NP-hard |
/// | `two-outputs-single-attribute` | `|J| = 2`, `|K| = 1` | NP-hard |
/// | `single-attribute` | `|K| = 1` | NP-hard |
/// | `out-degree-two` | all input and pool out-degrees at most 2 | NP-hard |
/// | `in-degree-two` | all pool and output in-degrees at most 2 | NP-hard |
/// | `general` | otherwise | NP-hard |
pub fn classify_pooling_instance(net: &PoolingNetwork, kappa: usize) -> Classification {
    use ComplexityClass::*;
    let n_i = net.inputs.len();
    let n_l = net.pools.len();
    let n_j = net.outputs.len();
    let n_k = net.attributes().len();
    let no_bypass = net.arcs.z.is_empty();
    let single_pool = n_l == 1 && no_bypass;
    let rule = |class, rule| Classification { class, rule };

    if n_k == 0 || !net.has_quality_constraints() {
        return rule(Polynomial, "no-quality");
    }
    if n_l == 0 {
        return rule(Polynomial, "no-pools");
    }
    if n_i == 1 {
        return rule(Polynomial, "single-input");
    }
    if n_j == 1 {
        return rule(Polynomial, "single-output");
    }
    if net.pools.iter().all(|l| net.in_degree_pool(&l.id).min(net.out_degree_pool(&l.id)) == 1) {
        return rule(Polynomial, "pool-degree-one");
    }
    if single_pool && n_i <= kappa {
        return rule(Polynomial, "single-pool-few-inputs");
    }
    if single_pool && n_j <= kappa {
        return rule(Polynomial, "single-pool-few-outputs");
    }
    if single_pool && n_k <= kappa {
        return rule(Polynomial, "single-pool-few-attributes");
    }
    let fixed_demand = n_l == 1
        && n_k == 1
        && net.inputs.iter().all(|i| i.supply.0 == 0.0 && i.supply.1 == f64::INFINITY)
        && net.pools.iter().all(|l| l.capacity == f64::INFINITY)
        && net.outputs.iter().all(|j| j.demand.0 == j.demand.1);
    if fixed_demand {
        return rule(Polynomial, "single-pool-fixed-demand");
    }
    if single_pool {
        return rule(StronglyNpHard, "single-pool-no-bypass");
    }
    if n_k == 1 {
        if n_i == 2 && n_j == 2 {
            return rule(WeaklyNpHard, "two-by-two-single-attribute");
        }
        if n_i == 2 {
            return rule(NpHard, "two-inputs-single-attribute");
        }
        if n_j == 2 {
            return rule(NpHard, "two-outputs-single-attribute");
        }
        return rule(NpHard, "single-attribute");
    }
    let out_two = net.inputs.iter().all(|i| net.out_degree_input(&i.id) <= 2)
        && net.pools.iter().all(|l| net.out_degree_pool(&l.id) <= 2);
    if out_two {
        return rule(NpHard, "out-degree-two");
    }
    let in_two = net.pools.iter().all(|l| net.in_degree_pool(&l.id) <= 2)
        && net.outputs.iter().all(|j| net.in_degree_output(&j.id) <= 2);
    if in_two {
        return rule(NpHard, "in-degree-two");
    }
    rule(NpHard, "general")
}
