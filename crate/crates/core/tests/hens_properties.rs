use pse_core::hens::{
    greedy_packing_matches, lower_bound_matches, lp_round_matches, match_grid, min_utility_cascade, min_utility_lp,
    solve_matches_exact, utility_energy_lower_bound, validate_match_plan, water_filling_matches, HensInstance,
    MatchesOptions,
};
use pse_core::io::{random_hens, HensShape};
use pse_core::{MilpLimits, MilpStatus};
use proptest::prelude::*;

fn streams(balanced: bool) -> impl Strategy<Value = HensInstance> {
    (1usize..=3, 1usize..=3, 1usize..=3, any::<u64>()).prop_map(move |(hot, cold, intervals, seed)| {
        random_hens(seed, HensShape { hot, cold, intervals, balanced }).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn heuristics_are_valid_and_bracketed(inst in streams(true)) {
        let grid = match_grid(&inst).unwrap();
        let (exact, _) = solve_matches_exact(&grid, MatchesOptions::default(), &MilpLimits::default()).unwrap();
        prop_assert_eq!(exact.status, MilpStatus::Optimal);
        let lb = lower_bound_matches(&grid).unwrap() as f64;
        prop_assert!(lb <= exact.objective + 1e-9);
        for out in [lp_round_matches(&grid), water_filling_matches(&grid), greedy_packing_matches(&grid)] {
            let out = out.unwrap();
            let plan = out.plan.expect("balanced instances always route");
            prop_assert!(validate_match_plan(&grid, &plan, 1e-6).is_feasible());
            prop_assert!(plan.match_count() as f64 >= exact.objective - 1e-9);
            prop_assert!(out.certificate.unwrap().ratio.unwrap() >= 1.0);
        }
    }

    #[test]
    fn cascade_agrees_with_transshipment(inst in streams(false)) {
        let c = min_utility_cascade(&inst).unwrap();
        let l = min_utility_lp(&inst).unwrap();
        prop_assert!((c.cost - l.cost).abs() <= 1e-6);
        prop_assert!(c.cost >= utility_energy_lower_bound(&inst) - 1e-6);
    }

    #[test]
    fn unbalanced_instances_still_route(inst in streams(false)) {
        let grid = match_grid(&inst).unwrap();
        let out = water_filling_matches(&grid).unwrap();
        let plan = out.plan.unwrap();
        prop_assert!(validate_match_plan(&grid, &plan, 1e-6).is_feasible());
    }
}
