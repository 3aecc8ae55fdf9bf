mod common;

use pse_core::solver::{brute_force_binary_oracle, enumerate_vertices_oracle};
use pse_core::{check_feasibility, solve_lp, solve_milp, LpStatus, MilpLimits, MilpStatus};

#[test]
fn simplex_matches_vertex_enumeration() {
    for seed in 0..400 {
        let m = common::random_lp(seed);
        let fast = solve_lp(&m);
        let slow = enumerate_vertices_oracle(&m).unwrap();
        assert_eq!(fast.status, slow.status, "seed {seed}");
        if fast.status == LpStatus::Optimal {
            assert!((fast.objective - slow.objective).abs() <= 1e-6, "seed {seed}: {} vs {}", fast.objective, slow.objective);
            let report = check_feasibility(&m, fast.primal.as_ref().unwrap(), 1e-6).unwrap();
            assert!(report.is_feasible(), "seed {seed}: {report:?}");
        }
    }
}

#[test]
fn branch_and_bound_matches_enumeration() {
    for seed in 0..300 {
        let (m, bins) = common::random_milp(seed);
        let bb = solve_milp(&m, &MilpLimits::default());
        let brute = brute_force_binary_oracle(&m, &bins).unwrap();
        match brute.status {
            MilpStatus::Optimal => {
                assert_eq!(bb.status, MilpStatus::Optimal, "seed {seed}");
                assert!((bb.objective - brute.objective).abs() <= 1e-6, "seed {seed}");
                let report = check_feasibility(&m, bb.primal.as_ref().unwrap(), 1e-6).unwrap();
                assert!(report.is_feasible(), "seed {seed}: {report:?}");
            }
            other => assert_eq!(bb.status, other, "seed {seed}"),
        }
    }
}

#[test]
fn milp_is_deterministic() {
    let (m, _) = common::random_milp(7);
    let a = solve_milp(&m, &MilpLimits::default());
    let b = solve_milp(&m, &MilpLimits::default());
    assert_eq!(a, b);
}
