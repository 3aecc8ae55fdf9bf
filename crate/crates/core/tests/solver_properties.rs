mod common;

use pse_core::{check_feasibility, solve_lp, solve_milp, Assignment, LpStatus, MilpLimits, ObjectiveSense};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn feasible_points_never_beat_the_optimum(seed in 0u64..10_000, probe in 0u64..1000) {
        let m = common::random_lp(seed);
        let out = solve_lp(&m);
        prop_assume!(out.status == LpStatus::Optimal);
        let mut rng = ChaCha8Rng::seed_from_u64(probe);
        for _ in 0..20 {
            let mut a = Assignment::new();
            for v in m.variables() {
                a.set(v.id.clone(), rng.gen_range(v.lower..=v.upper));
            }
            if check_feasibility(&m, &a, 1e-9).unwrap().is_feasible() {
                let obj = m.objective_value(&a).unwrap();
                match m.sense() {
                    ObjectiveSense::Minimize => prop_assert!(obj >= out.objective - 1e-6),
                    ObjectiveSense::Maximize => prop_assert!(obj <= out.objective + 1e-6),
                }
            }
        }
    }

    #[test]
    fn solves_are_deterministic(seed in 0u64..10_000) {
        let m = common::random_lp(seed);
        // compared through Debug so NaN objectives count as equal
        prop_assert_eq!(format!("{:?}", solve_lp(&m)), format!("{:?}", solve_lp(&m)));
        let (m, _) = common::random_milp(seed);
        let limits = MilpLimits::default();
        prop_assert_eq!(format!("{:?}", solve_milp(&m, &limits)), format!("{:?}", solve_milp(&m, &limits)));
    }
}
