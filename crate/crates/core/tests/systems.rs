use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use stabcert::systems::{
    continued_fraction_x0, point_control_heat, point_control_heat_at, projection_matrix, spectral_projection_family, truncate,
    CutRule, PointLocation,
};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn truncation_is_nested(x0 in 0.01f64..0.99, c in 0.0f64..30.0, n in 2usize..20, m_frac in 0.0f64..1.0) {
        let spec = point_control_heat(x0, c, 20).unwrap();
        let m = 1 + ((n - 1) as f64 * m_frac) as usize;
        let twice = spec.leading(n).unwrap().leading(m).unwrap().to_lti();
        let once = truncate(&spec, m).unwrap();
        prop_assert_eq!(twice.a_matrix, once.a_matrix);
        prop_assert_eq!(twice.b_matrix, once.b_matrix);
    }

    #[test]
    fn rational_point_rows_vanish_exactly_at_integer_multiples(num in 1u64..12, den in 2u64..13) {
        prop_assume!(num < den);
        let spec = point_control_heat_at(PointLocation::Rational { num, den }, 0.0, 30).unwrap();
        for j in 1..=30u64 {
            let row = spec.control_rows[((j - 1) as usize, 0)];
            let integer = (j * num) % den == 0;
            prop_assert_eq!(row == 0.0, integer, "j = {}", j);
        }
    }

    #[test]
    fn projections_are_nested_orthogonal_and_dissipative(x0 in 0.05f64..0.95, c in 0.0f64..40.0, seed in 0u64..1000) {
        let spec = point_control_heat(x0, c, 10).unwrap();
        let fam = spectral_projection_family(&spec, &CutRule::ModeCount).unwrap();
        let a = spec.to_lti().a_matrix;
        let n = spec.n_modes();
        let mut prev: Vec<usize> = vec![];
        let mut rng_state = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
        let mut next = || {
            rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((rng_state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        for (pos, idx) in fam.projections.iter().enumerate() {
            let p = projection_matrix(idx, n);
            prop_assert!((&p * &p - &p).norm() == 0.0);
            prop_assert!((&p - p.transpose()).norm() == 0.0);
            prop_assert!(prev.iter().all(|i| idx.contains(i)));
            prev = idx.clone();
            let q = DMatrix::identity(n, n) - &p;
            for _ in 0..10 {
                let phi = DVector::from_fn(n, |_, _| next());
                for &t in &[0.0, 0.01, 0.1, 0.5, 1.0] {
                    let s = DMatrix::from_diagonal(&a.diagonal().map(|l| (l * t).exp()));
                    let lhs = (&q * &s * &phi).norm();
                    let rhs = fam.m_k[pos] * (-fam.alpha_k[pos] * t).exp() * phi.norm();
                    prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-300);
                }
            }
        }
    }
}

#[test]
fn convergent_error_bounds_hold_for_exact_indices() {
    for depth in 2..=6 {
        let cf = continued_fraction_x0(depth).unwrap();
        let checks = cf.convergent_bound_checks();
        assert!(!checks.is_empty());
        assert!(checks.iter().all(|c| c.1), "depth {depth}: {checks:?}");
    }
}

#[test]
fn continued_fraction_location_uses_last_exact_convergent() {
    let cf = continued_fraction_x0(3).unwrap();
    let x0 = cf.x0();
    assert_eq!(x0, 2981.0 / 5963.0);
    let spec = point_control_heat_at(PointLocation::ContinuedFraction { depth: 3 }, 0.0, 50).unwrap();
    assert!(spec.control_rows.iter().all(|r| *r != 0.0));
}
