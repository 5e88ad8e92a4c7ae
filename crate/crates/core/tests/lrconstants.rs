use nalgebra::DMatrix;
use proptest::prelude::*;
use stabcert::lrconstants::{
    constants_b1, constants_b2, constants_unbounded, estimate_spectral_constant, fattorini_distance, SemigroupBound,
};
use stabcert::systems::{spectral_projection_family, CutRule};
use stabcert::{SpectralSystem, UnboundedConstantsSpec};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn extra_sensors_never_raise_the_spectral_constant(
        rows in proptest::collection::vec(-2.0f64..2.0, 12),
        extra in proptest::collection::vec(-2.0f64..2.0, 6),
    ) {
        let eig: Vec<f64> = (1..=6).map(|j| -(j as f64)).collect();
        let one = DMatrix::from_fn(6, 2, |i, j| rows[2 * i + j]);
        let two = DMatrix::from_fn(6, 3, |i, j| if j < 2 { rows[2 * i + j] } else { extra[i] });
        let s1 = SpectralSystem::new(eig.clone(), one, "random", false).unwrap();
        let s2 = SpectralSystem::new(eig, two, "random", false).unwrap();
        let fam = spectral_projection_family(&s1, &CutRule::ModeCount).unwrap();
        for &k in &fam.ks {
            let c1 = estimate_spectral_constant(&s1, &fam, k).unwrap();
            let c2 = estimate_spectral_constant(&s2, &fam, k).unwrap();
            prop_assert!(c2 <= c1 * (1.0 + 1e-10), "k = {}: {} > {}", k, c2, c1);
        }
    }

    #[test]
    fn fattorini_distance_shrinks_as_the_pool_grows(
        rates in proptest::collection::vec(0.1f64..30.0, 2..6),
        t0 in 0.2f64..2.0,
    ) {
        let j = 0;
        let empty = fattorini_distance(&rates, t0, j, &[]).unwrap().distance;
        let l = rates[j];
        let full_norm = ((1.0 - (-2.0 * l * t0).exp()) / (2.0 * l)).sqrt();
        prop_assert!((empty - full_norm).abs() <= 1e-14 * full_norm);
        let mut prev = empty;
        for size in 1..rates.len() {
            let pool: Vec<usize> = (1..=size).collect();
            let d = fattorini_distance(&rates, t0, j, &pool).unwrap().distance;
            prop_assert!(d <= prev * (1.0 + 1e-8) + 1e-12, "{} > {}", d, prev);
            prev = d;
        }
    }

    #[test]
    fn residual_constants_grow_with_alpha(
        m in 1.0f64..3.0, d0 in 0.0f64..1.0, mk in 0.5f64..2.0, ck in 0.0f64..3.0, b in 0.0f64..2.0,
        t0 in 0.1f64..2.0, gamma in 0.05f64..0.45, a1 in 0.1f64..4.0, da in 0.01f64..2.0,
    ) {
        let bound = SemigroupBound::new(m, d0).unwrap();
        let a2 = a1 + da;
        let ak = a2 + 1.0;
        let spec = UnboundedConstantsSpec { gamma, rho0: 0.5, c_gamma: 1.0, b_norm: b };
        let pairs = [
            (constants_b1(&bound, mk, ak, ck, b, a1).unwrap(), constants_b1(&bound, mk, ak, ck, b, a2).unwrap()),
            (constants_b2(&bound, t0, ck, mk, ak, b, a1).unwrap(), constants_b2(&bound, t0, ck, mk, ak, b, a2).unwrap()),
            (constants_unbounded(&bound, &spec, t0, ck, mk, a1).unwrap(), constants_unbounded(&bound, &spec, t0, ck, mk, a2).unwrap()),
        ];
        for (lo, hi) in pairs {
            prop_assert!(hi.c >= lo.c);
            prop_assert!(hi.d >= lo.d);
        }
    }
}
