use proptest::prelude::*;
use stabcert::periodic::{
    build_example4, noncontrollability_witness, periodic_evolution, periodic_observation_energy,
    periodic_observation_energy_quadrature, periodic_weakobs_check, example4_constant, example4_stabilizability_check,
};
use stabcert::CertificateStatus;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn evolution_composes(r in 0.0f64..2.0, ds in 0.0f64..2.0, dt in 0.0f64..2.0) {
        let sys = build_example4(8, 12).unwrap();
        let (s, t) = (r + ds, r + ds + dt);
        let lhs = periodic_evolution(&sys, t, s).unwrap() * periodic_evolution(&sys, s, r).unwrap();
        let rhs = periodic_evolution(&sys, t, r).unwrap();
        prop_assert!((lhs - rhs).amax() <= 1e-12);
    }

    #[test]
    fn evolution_is_periodic(s in 0.0f64..3.0, dt in 0.0f64..3.0) {
        let sys = build_example4(8, 12).unwrap();
        let a = periodic_evolution(&sys, s + dt + 1.0, s + 1.0).unwrap();
        let b = periodic_evolution(&sys, s + dt, s).unwrap();
        // only the rounding of the shifted difference can separate the two
        prop_assert!((a - b).amax() <= 1e-14);
    }

    #[test]
    fn closed_form_energy_matches_quadrature(psi in proptest::collection::vec(-1.0f64..1.0, 10), m in 1usize..4) {
        let sys = build_example4(10, 12).unwrap();
        let closed = periodic_observation_energy(&sys, m, &psi).unwrap();
        let quad = periodic_observation_energy_quadrature(&sys, m, &psi).unwrap();
        prop_assert!((closed - quad).abs() <= 1e-9 * closed.abs().max(1e-300));
    }
}

#[test]
fn witnesses_refute_and_grow_with_c() {
    let sys = build_example4(12, 14).unwrap();
    for m in 1..=3 {
        let mut last = 0;
        for c in [2.0, 10.0, 100.0] {
            let w = noncontrollability_witness(&sys, m, c).unwrap();
            assert!(w.lhs > w.rhs, "m = {m}, C = {c}");
            assert!(w.n >= last);
            last = w.n;
        }
    }
    let small = noncontrollability_witness(&sys, 1, 1.5).unwrap().n;
    let big = noncontrollability_witness(&sys, 1, 1e6).unwrap().n;
    assert!(big > small);
}

#[test]
fn worked_family_certificates() {
    let sys = build_example4(10, 12).unwrap();
    for k in 1..=5 {
        let c = example4_stabilizability_check(&sys, k, 128).unwrap();
        assert_eq!(c.status, CertificateStatus::Certified);
        let generic = periodic_weakobs_check(&sys, k, 1, example4_constant(&sys, k).unwrap(), 128).unwrap();
        assert_eq!(generic.status, c.status);
        assert_eq!(generic.sufficient_margin, c.sufficient_margin);
    }
    assert!(example4_stabilizability_check(&sys, 10, 16).is_err());
}
