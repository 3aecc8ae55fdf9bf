use pse_core::io::{random_stn, StnShape};
use pse_core::scheduling::{
    build_discrete_time_model, greedy_list_schedule, lp_round_schedule, solve_discrete_time, validate_schedule,
    StateTaskNetwork,
};
use pse_core::{MilpLimits, MilpStatus};
use proptest::prelude::*;

fn recipe() -> impl Strategy<Value = StateTaskNetwork> {
    (1usize..=3, 1usize..=2, 4usize..=8, any::<u64>())
        .prop_map(|(tasks, units, horizon, seed)| random_stn(seed, StnShape { tasks, units, horizon }).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn bounds_sandwich_the_optimum(stn in recipe()) {
        let (exact, _) = solve_discrete_time(&stn, &MilpLimits::default()).unwrap();
        for out in [lp_round_schedule(&stn).unwrap(), greedy_list_schedule(&stn).unwrap()] {
            if let Some(s) = &out.schedule {
                let report = validate_schedule(&stn, s, 1e-6);
                prop_assert!(report.is_feasible(), "{:?}", report.violations);
                if exact.status == MilpStatus::Optimal {
                    prop_assert!(report.makespan >= exact.objective - 1e-6);
                }
            }
            if let (Some(bound), MilpStatus::Optimal) = (out.bound, exact.status) {
                prop_assert!(bound <= exact.objective + 1e-6);
            }
        }
    }

    #[test]
    fn model_build_is_reproducible(stn in recipe()) {
        prop_assert_eq!(build_discrete_time_model(&stn).unwrap(), build_discrete_time_model(&stn).unwrap());
    }
}
