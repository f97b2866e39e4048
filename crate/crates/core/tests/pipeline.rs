use proptest::prelude::*;
use scattomo_core::extrapolation::{combine, PowerLadder};
use scattomo_core::hilbert::{exact_s_element, random_unitary, BasisSpec, FockSpace, TruncatedUnitary, UnitaryKind};
use scattomo_core::protocol::{
    build_input_plan_elastic, build_input_plan_general, equal_magnitudes, first_order_bound, reconstruct,
    simulate_records, NoiseConfig, Target,
};
use scattomo_core::Complex64;

fn oracle(kind: UnitaryKind, seed: u64) -> TruncatedUnitary {
    let space = FockSpace::new(BasisSpec::new(2, 8).unwrap()).unwrap();
    random_unitary(&space, kind, seed)
}

fn elastic_estimate(u: &TruncatedUnitary, target: &Target, power: f64) -> Complex64 {
    let plan = build_input_plan_elastic(2, &equal_magnitudes(2, power)).unwrap();
    let records = simulate_records(u, &plan, &target.out_modes, 2, &NoiseConfig::exact()).unwrap();
    reconstruct(&records, target).unwrap().value
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn elastic_error_within_first_order_bound(seed in any::<u64>(), power in 0.001f64..0.05, p in 0usize..2, k in 0usize..2) {
        let u = oracle(UnitaryKind::Elastic, seed);
        for target in [Target::new(&[p], &[k]), Target::new(&[0, 1], &[0, 1])] {
            let exact = exact_s_element(&u, &target.out_modes, &target.in_modes).unwrap();
            let err = (elastic_estimate(&u, &target, power) - exact).norm();
            prop_assert!(err <= first_order_bound(2, target.in_modes.len(), power));
        }
    }

    #[test]
    fn general_protocol_tracks_vacuum_fixing_oracle(seed in any::<u64>()) {
        let u = oracle(UnitaryKind::GeneralVacuumFixing, seed);
        let power = 0.005;
        let plan = build_input_plan_general(2, &equal_magnitudes(2, power)).unwrap();
        let target = Target::new(&[0, 1], &[0, 1]);
        let records = simulate_records(&u, &plan, &target.out_modes, 2, &NoiseConfig::exact()).unwrap();
        let estimate = reconstruct(&records, &target).unwrap();
        let exact = exact_s_element(&u, &target.out_modes, &target.in_modes).unwrap();
        prop_assert!((estimate.value - exact).norm() <= estimate.first_order_bound);
    }

    #[test]
    fn higher_order_combination_beats_first_order(seed in any::<u64>()) {
        let u = oracle(UnitaryKind::Elastic, seed);
        let target = Target::new(&[0, 1], &[0, 1]);
        let exact = exact_s_element(&u, &target.out_modes, &target.in_modes).unwrap();
        let ladder = PowerLadder::new(0.01, 1.2, 3).unwrap();
        let estimates: Vec<_> = ladder.powers().map(|x| (x, elastic_estimate(&u, &target, x))).collect();
        let combined = combine(&estimates, &ladder).unwrap().value;
        prop_assert!((combined - exact).norm() < (estimates[0].1 - exact).norm());
    }
}

#[test]
fn identity_scatterer_is_recovered() {
    let space = FockSpace::new(BasisSpec::new(2, 8).unwrap()).unwrap();
    let u = TruncatedUnitary::identity(space);
    for (p, k) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
        let target = Target::new(&[p], &[k]);
        let value = elastic_estimate(&u, &target, 0.01);
        let expected = if p == k { 1.0 } else { 0.0 };
        assert!((value - Complex64::new(expected, 0.0)).norm() <= first_order_bound(2, 1, 0.01));
    }
}
