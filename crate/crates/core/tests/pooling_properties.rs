use pse_core::exec::Execution;
use pse_core::io::{random_pooling, PoolingShape};
use pse_core::pooling::{
    classify_pooling_instance, grid_oracle_pooling, multistart_alternating, relaxation_bound, solve_discretized,
    Formulation, PoolingNetwork,
};
use pse_core::MilpLimits;
use proptest::prelude::*;

fn network() -> impl Strategy<Value = PoolingNetwork> {
    (1usize..=3, 1usize..=2, 1usize..=2, 1usize..=2, any::<u64>()).prop_map(|(i, l, j, k, seed)| {
        random_pooling(seed, PoolingShape { inputs: i, pools: l, outputs: j, attributes: k }).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn relaxations_order_below_feasible_objectives(net in network()) {
        let p = relaxation_bound(&net, Formulation::P, 1).unwrap().unwrap();
        let pq = relaxation_bound(&net, Formulation::Pq, 1).unwrap().unwrap();
        prop_assert!(p <= pq + 1e-6);
        let outcomes = [
            multistart_alternating(&net, 30, Execution::Sequential).unwrap(),
            grid_oracle_pooling(&net, 3, Execution::Sequential).unwrap(),
        ];
        for out in outcomes {
            if let Some(sol) = out.solution {
                prop_assert!(sol.check_p(&net, 1e-6).unwrap().is_feasible());
                prop_assert!(sol.objective >= pq - 1e-6);
                if let Some(cert) = out.certificate {
                    prop_assert!(cert.incumbent >= cert.bound - 1e-6);
                }
            }
        }
    }

    #[test]
    fn discretized_solutions_are_restrictions(net in network(), grid in 1usize..=4) {
        if let Some(sol) = solve_discretized(&net, grid, &MilpLimits::default()).unwrap().solution {
            prop_assert!(sol.check_p(&net, 1e-6).unwrap().is_feasible());
            let pq = sol.check_pq(&net, 1e-6).unwrap();
            prop_assert!(pq.is_some_and(|r| r.is_feasible()));
        }
    }

    #[test]
    fn classification_is_pure(net in network(), kappa in 1usize..=3) {
        let copy = net.clone();
        prop_assert_eq!(classify_pooling_instance(&net, kappa), classify_pooling_instance(&copy, kappa));
    }
}
