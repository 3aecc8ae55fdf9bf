use pse_core::io::{generate, parse_instance, write_instance, GenSpec, HensShape, PoolingShape, StnShape};
use proptest::prelude::*;

fn spec() -> impl Strategy<Value = GenSpec> {
    prop_oneof![
        (1usize..=4, 0usize..=3, 1usize..=3, 0usize..=2).prop_map(|(inputs, pools, outputs, attributes)| {
            GenSpec::Pooling(PoolingShape { inputs, pools, outputs, attributes })
        }),
        (1usize..=4, 1usize..=3, 2usize..=10).prop_map(|(tasks, units, horizon)| GenSpec::Stn(StnShape { tasks, units, horizon })),
        (1usize..=4, 1usize..=4, 1usize..=4, any::<bool>())
            .prop_map(|(hot, cold, intervals, balanced)| GenSpec::Hens(HensShape { hot, cold, intervals, balanced })),
        (1usize..=6, 1usize..=6).prop_map(|(hot, cold)| GenSpec::SingleInterval { hot, cold }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn written_instances_parse_back(spec in spec(), seed in any::<u64>()) {
        let env = generate(&spec, seed).unwrap();
        let text = write_instance(&env);
        let back = parse_instance(&text).unwrap();
        prop_assert_eq!(&back, &env);
        prop_assert_eq!(write_instance(&back), text);
    }

    #[test]
    fn generators_are_pure(spec in spec(), seed in any::<u64>()) {
        prop_assert_eq!(generate(&spec, seed).unwrap(), generate(&spec, seed).unwrap());
    }
}
