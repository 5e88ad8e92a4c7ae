use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use proptest::prelude::*;
use stabcert::feedback::{concatenated_control, min_norm_eps_null, solve_shifted_riccati};
use stabcert::linalg::hautus_margin;
use stabcert::semigroup::observability_gramian;
use stabcert::systems::{build_system, LtiSystem};
use stabcert::{Error, QuadratureSpec};

fn system(n: usize, m: usize) -> impl Strategy<Value = LtiSystem> {
    (
        proptest::collection::vec(-2.0f64..2.0, n * n),
        proptest::collection::vec(-2.0f64..2.0, n * m),
    )
        .prop_map(move |(a, b)| {
            build_system(DMatrix::from_row_slice(n, n, &a), DMatrix::from_row_slice(n, m, &b)).unwrap()
        })
}

fn any_system() -> impl Strategy<Value = LtiSystem> {
    (1usize..6, 1usize..3).prop_flat_map(|(n, m)| system(n, m))
}

fn spectra_match(x: &[Complex64], y: &[Complex64], tol: f64) -> bool {
    x.iter().all(|a| y.iter().any(|b| (a - b).norm() <= tol)) && y.iter().all(|b| x.iter().any(|a| (a - b).norm() <= tol))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn riccati_residual_and_unshift(sys in any_system(), mu in 0.1f64..5.0) {
        match solve_shifted_riccati(&sys, mu) {
            Ok(r) => {
                let n = sys.n_states();
                let at = &sys.a_matrix + DMatrix::identity(n, n) * mu;
                let bbt = &sys.b_matrix * sys.b_matrix.transpose();
                let p = &r.riccati_p;
                let res = (at.transpose() * p + p * &at - p * &bbt * p + DMatrix::identity(n, n)).norm();
                prop_assert!(res <= 1e-8 * (1.0 + p.norm().powi(2)), "residual {}", res);
                let acl = &sys.a_matrix + &sys.b_matrix * &r.gain_k;
                prop_assert_eq!(r.shifted_rate, r.measured_rate - mu);
                // separately computed spectra agree to 1e-12 only when the gain
                // is moderate; nearly unstabilizable pairs give ill-conditioned ones
                let margin = at
                    .complex_eigenvalues()
                    .iter()
                    .filter(|l| l.re >= 0.0)
                    .map(|&l| hautus_margin(&at, &sys.b_matrix, l))
                    .fold(f64::INFINITY, f64::min);
                if margin < 0.1 || p.norm() > 1e3 {
                    return Ok(());
                }
                let plain: Vec<Complex64> = acl.complex_eigenvalues().iter().copied().collect();
                let shifted: Vec<Complex64> = (&acl + DMatrix::identity(n, n) * mu)
                    .complex_eigenvalues()
                    .iter()
                    .map(|z| z - mu)
                    .collect();
                prop_assert!(spectra_match(&plain, &shifted, 1e-12 * acl.norm().max(1.0)));
                prop_assert!(r.measured_rate >= mu - 1e-8);
            }
            Err(Error::Unstabilizable { .. }) => {}
            Err(e) => prop_assert!(false, "unexpected error {}", e),
        }
    }

    #[test]
    fn min_norm_control_is_locally_optimal(
        sys in system(2, 1), t in 0.3f64..2.0, eps in 0.05f64..0.8,
        dirs in proptest::collection::vec(-1.0f64..1.0, 40),
    ) {
        let y0 = DVector::from_vec(vec![1.0, -0.5]);
        let Ok(u) = min_norm_eps_null(&sys, t, eps, &y0) else { return Ok(()); };
        let g = observability_gramian(&sys, t, &QuadratureSpec::default()).unwrap().matrix;
        let z = stabcert::linalg::expm_scaled(&sys.a_matrix, t) * &y0;
        let eta = DVector::from_column_slice(&u.segments[0].eta);
        let target = eps * y0.norm();
        for k in 0..20 {
            let d = DVector::from_vec(vec![dirs[2 * k], dirs[2 * k + 1]]) * (0.05 * (eta.norm() + 1e-3));
            let e2 = &eta + d;
            if (&z - &g * &e2).norm() <= target {
                let norm = e2.dot(&(&g * &e2)).max(0.0).sqrt();
                prop_assert!(norm >= u.l2_norm * (1.0 - 1e-9), "{} < {}", norm, u.l2_norm);
            }
        }
    }

    #[test]
    fn min_norm_cost_is_nonincreasing_in_eps(sys in system(2, 1), t in 0.3f64..2.0, e1 in 0.01f64..0.9, de in 0.0f64..0.5) {
        let y0 = DVector::from_vec(vec![0.3, 1.0]);
        let (Ok(a), Ok(b)) = (min_norm_eps_null(&sys, t, e1, &y0), min_norm_eps_null(&sys, t, e1 + de, &y0)) else {
            return Ok(());
        };
        prop_assert!(b.l2_norm <= a.l2_norm * (1.0 + 1e-9) + 1e-12);
    }

    #[test]
    fn concatenation_contracts_geometrically(
        sys in system(2, 1), beta in 0.2f64..1.5, t_seg in 0.5f64..1.5, shrink in 0.3f64..1.0,
    ) {
        let eps = (-2.0 * beta * t_seg).exp() * shrink;
        let y0 = DVector::from_vec(vec![1.0, 1.0]);
        let Ok((_, rep)) = concatenated_control(&sys, beta, t_seg, eps, &y0, 5) else { return Ok(()); };
        for (i, s) in rep.state_norms.iter().enumerate() {
            prop_assert!(*s <= eps.powi(i as i32) * y0.norm() * (1.0 + 1e-9));
        }
        prop_assert!(rep.weighted_norm <= rep.geometric_bound * (1.0 + 1e-12) + 1e-300);
    }
}

#[test]
fn dense_unstabilizable_pair_is_named() {
    let sys = build_system(
        DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, -1.0]),
        DMatrix::from_row_slice(2, 1, &[0.0, 1.0]),
    )
    .unwrap();
    match solve_shifted_riccati(&sys, 1.0) {
        Err(Error::Unstabilizable { re, im }) => {
            assert!((re - 3.0).abs() < 1e-12);
            assert_eq!(im, 0.0);
        }
        other => panic!("expected unstabilizable, got {other:?}"),
    }
}
