mod common;

use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn backward_matches_central_differences(seed in any::<u64>()) {
        let case = common::random_case(seed);
        let err = common::parameter_gradient_error(&case);
        prop_assert!(err <= 1e-5, "relative error {err:e}");
    }

    #[test]
    fn mask_gradient_matches_central_differences(seed in any::<u64>(), mask_seed in any::<u64>()) {
        let case = common::random_case(seed);
        let err = common::mask_gradient_error(&case, mask_seed);
        prop_assert!(err <= 1e-5, "relative error {err:e}");
    }
}
