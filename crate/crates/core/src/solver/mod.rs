//! Dense two-phase simplex, best-bound branch and bound, and brute-force
//! oracles for checking both at desk scale.

mod milp;
mod oracle;
mod simplex;

use thiserror::Error;

use crate::model::Assignment;

pub use milp::{solve_milp, MilpLimits};
pub use oracle::{brute_force_binary_oracle, enumerate_vertices_oracle};
pub use simplex::solve_lp;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// The pivot cap was reached before optimality was proven.
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpOutcome {
    pub status: LpStatus,
    /// Objective in the model's own sense; NaN unless optimal.
    pub objective: f64,
    /// Present iff `status == Optimal`.
    pub primal: Option<Assignment>,
    pub iteration_count: usize,
}

impl LpOutcome {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MilpStatus {
    Optimal,
    /// A limit stopped the search after an incumbent was found.
    FeasibleLimit,
    Infeasible,
    /// A limit stopped the search before any incumbent was found.
    NodeLimit,
    /// The root relaxation is unbounded.
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MilpOutcome {
    pub status: MilpStatus,
    /// Incumbent objective in the model's sense; NaN without an incumbent.
    pub objective: f64,
    pub primal: Option<Assignment>,
    /// Proven bound in the model's sense (lower bound when minimising).
    pub best_bound: f64,
    pub nodes_explored: usize,
}

impl MilpOutcome {
    pub fn has_incumbent(&self) -> bool {
        self.primal.is_some()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("oracle limited to {limit} {what}, model has {actual}")]
    TooLarge { what: &'static str, limit: usize, actual: usize },
    #[error("variable `{0}` needs finite bounds for vertex enumeration")]
    UnboundedVariable(String),
    #[error("variable `{0}` is integer but not binary")]
    NonBinaryInteger(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
}
