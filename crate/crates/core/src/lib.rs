//! Optimization toolkit for three process-systems problems: pooling
//! networks, state-task network batch scheduling and heat exchanger network
//! synthesis.
//!
//! Every problem module builds its formulations on the shared [`model`]
//! layer and solves them with the self-contained engines in [`solver`].
//! Heuristics report an [`ApproximationCertificate`] pairing the value they
//! found with a relaxation bound, so the quality of a solution is visible
//! without knowing the optimum.
//!
//! The `parallel` feature (on by default) lets multistart heuristics, grid
//! oracles and benchmark suites fan out over rayon; [`exec::Execution`]
//! selects the mode at run time and falls back to sequential iteration when
//! the feature is disabled.

pub mod exec;
pub mod harness;
pub mod hens;
pub mod io;
pub mod model;
pub mod pooling;
pub mod scheduling;
pub mod solver;

pub use model::{
    check_feasibility, evaluate_expression, export_lp_text, make_certificate,
    ApproximationCertificate, Assignment, BilinearModel, BilinearTerm, CertificateFlag,
    FeasibilityReport, Integrality, LinearConstraint, LinearExpression, LinearModel, ModelError,
    ObjectiveSense, RowSense, VariableDef, DEFAULT_TOL,
};
pub use solver::{solve_lp, solve_milp, LpOutcome, LpStatus, MilpLimits, MilpOutcome, MilpStatus};
