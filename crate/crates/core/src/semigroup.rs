//! Semigroup evaluation, observation energies and Gramians.
//!
//! The Gramian `G(T) = ∫₀ᵀ e^{At}BBᵀe^{Aᵀt} dt` is both the observability
//! Gramian of `(Aᵀ, Bᵀ)` and the controllability Gramian of `(A, B)`, so
//! `⟨G(T)φ, φ⟩ = ∫₀ᵀ ‖Bᵀe^{Aᵀt}φ‖² dt`.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{expm_scaled, is_diagonal, symmetrize};
use crate::lrconstants::ProjectionFamily;
use crate::quadrature::{integrate, integrate_vec, QuadratureSpec};
use crate::systems::{LtiSystem, SpectralSystem};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GramianResult {
    pub matrix: DMatrix<f64>,
    pub horizon: f64,
    pub quadrature_error_estimate: f64,
}

fn check_horizon(t: f64) -> Result<()> {
    if !t.is_finite() {
        return Err(Error::NonFinite("time"));
    }
    if t <= 0.0 {
        return Err(Error::InvalidArgument(format!("horizon {t} must be positive")));
    }
    Ok(())
}

/// `e^{At}x`, or `e^{Aᵀt}x` when `adjoint` is set.
pub fn propagate(sys: &LtiSystem, t: f64, x: &DVector<f64>, adjoint: bool) -> Result<DVector<f64>> {
    if !t.is_finite() {
        return Err(Error::NonFinite("time"));
    }
    if t < 0.0 {
        return Err(Error::InvalidArgument(format!("cannot propagate backwards (t = {t})")));
    }
    if x.len() != sys.n_states() {
        return Err(Error::Dimension(format!("state has length {}, expected {}", x.len(), sys.n_states())));
    }
    let e = if adjoint {
        expm_scaled(&sys.a_matrix.transpose(), t)
    } else {
        expm_scaled(&sys.a_matrix, t)
    };
    Ok(e * x)
}

/// `∫₀ᵀ ‖Bᵀe^{Aᵀt}φ‖² dt` by composite quadrature.
pub fn observation_energy(sys: &LtiSystem, horizon: f64, phi: &DVector<f64>, quad: &QuadratureSpec) -> Result<f64> {
    check_horizon(horizon)?;
    if phi.len() != sys.n_states() {
        return Err(Error::Dimension("phi has the wrong length".into()));
    }
    let at = sys.a_matrix.transpose();
    let bt = sys.b_matrix.transpose();
    let (v, _) = integrate(
        |t| {
            let y = &bt * (expm_scaled(&at, t) * phi);
            y.norm_squared()
        },
        0.0,
        horizon,
        quad,
    )?;
    Ok(v)
}

/// `G(T)`: closed form for diagonal `A`, quadrature otherwise.
pub fn observability_gramian(sys: &LtiSystem, horizon: f64, quad: &QuadratureSpec) -> Result<GramianResult> {
    check_horizon(horizon)?;
    if is_diagonal(&sys.a_matrix) {
        gramian_closed_form(sys, horizon)
    } else {
        gramian_quadrature(sys, horizon, quad)
    }
}

/// `∫₀ᵀ e^{st} dt`, switching to `T + sT²/2` near `s = 0`.
pub fn exp_integral(s: f64, horizon: f64) -> f64 {
    if (s * horizon).abs() < 1e-8 {
        horizon + s * horizon * horizon / 2.0
    } else {
        (s * horizon).exp_m1() / s
    }
}

/// Closed-form Gramian of a diagonal generator.
pub fn gramian_closed_form(sys: &LtiSystem, horizon: f64) -> Result<GramianResult> {
    check_horizon(horizon)?;
    if !is_diagonal(&sys.a_matrix) {
        return Err(Error::InvalidArgument("closed-form Gramian needs a diagonal generator".into()));
    }
    let n = sys.n_states();
    let b = &sys.b_matrix;
    let bbt = b * b.transpose();
    let g = DMatrix::from_fn(n, n, |i, j| {
        let s = sys.a_matrix[(i, i)] + sys.a_matrix[(j, j)];
        bbt[(i, j)] * exp_integral(s, horizon)
    });
    if g.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("Gramian"));
    }
    Ok(GramianResult {
        matrix: g,
        horizon,
        quadrature_error_estimate: 0.0,
    })
}

/// Gramian by adaptive quadrature of `e^{At}BBᵀe^{Aᵀt}`.
pub fn gramian_quadrature(sys: &LtiSystem, horizon: f64, quad: &QuadratureSpec) -> Result<GramianResult> {
    check_horizon(horizon)?;
    let n = sys.n_states();
    let a = &sys.a_matrix;
    let b = &sys.b_matrix;
    let (v, err) = integrate_vec(
        |t| {
            let eb = expm_scaled(a, t) * b;
            let w = &eb * eb.transpose();
            w.as_slice().to_vec()
        },
        0.0,
        horizon,
        n * n,
        quad,
    )?;
    let g = symmetrize(&DMatrix::from_vec(n, n, v));
    if g.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("Gramian"));
    }
    Ok(GramianResult {
        matrix: g,
        horizon,
        quadrature_error_estimate: err,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailReport {
    /// Largest `‖(I−P_k)e^{Aᵀt}φ‖ / (M_k e^{−α_k t}‖φ‖)` seen.
    pub worst_ratio: f64,
    /// `(k, t)` pairs where the ratio exceeded `1 + 1e-12`.
    pub violations: Vec<(usize, f64)>,
    pub evaluations: usize,
}

/// Samples the tail decay condition `‖(I−P_k)S(t)*φ‖ ≤ M_k e^{−α_k t}‖φ‖`.
///
/// Each `k` is tested on `samples` Gaussian vectors plus the first
/// discarded basis vector, which saturates the bound for diagonal systems.
pub fn dissipative_tail_check(
    spec: &SpectralSystem,
    fam: &ProjectionFamily,
    t_grid: &[f64],
    samples: usize,
    seed: u64,
) -> TailReport {
    let n = spec.n_modes();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = TailReport {
        worst_ratio: 0.0,
        violations: Vec::new(),
        evaluations: 0,
    };
    for (i, proj) in fam.projections.iter().enumerate() {
        let keep: std::collections::HashSet<usize> = proj.iter().copied().collect();
        let (mk, ak) = (fam.m_k[i], fam.alpha_k[i]);
        let first_out = (0..n).find(|j| !keep.contains(j));
        let mut vectors: Vec<Vec<f64>> = (0..samples)
            .map(|_| (0..n).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect();
        if let Some(j) = first_out {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            vectors.push(e);
        }
        for &t in t_grid {
            for phi in &vectors {
                let norm = phi.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm == 0.0 {
                    continue;
                }
                // scale by e^{α_k t} inside the sum to avoid underflow
                let tail: f64 = (0..n)
                    .filter(|j| !keep.contains(j))
                    .map(|j| (phi[j] * ((spec.eigenvalues[j] + ak) * t).exp()).powi(2))
                    .sum::<f64>()
                    .sqrt();
                let ratio = tail / (mk * norm);
                report.evaluations += 1;
                if ratio > report.worst_ratio {
                    report.worst_ratio = ratio;
                }
                if ratio > 1.0 + 1e-12 && !report.violations.contains(&(fam.ks[i], t)) {
                    report.violations.push((fam.ks[i], t));
                }
            }
        }
    }
    report
}
