//! Feedback with a prescribed decay rate, minimum-norm steering controls and
//! their concatenation.
//!
//! A gain with decay rate `μ` comes from the stabilizing solution of the
//! shifted Riccati equation
//! `(A+μI)ᵀP + P(A+μI) − PBBᵀP + I = 0`, `K = −BᵀP`: the shifted closed loop
//! `A + μI + BK` is Hurwitz, so `A + BK` decays faster than `e^{−μt}`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{complex_schur, expm_scaled, hautus_margin, reorder_schur, solve_lyapunov, spectral_norm, symmetrize, CMatrix};
use crate::quadrature::QuadratureSpec;
use crate::semigroup::observability_gramian;
use crate::systems::LtiSystem;
use crate::weakobs::{CertificateFamily, CertificateStatus};

/// Which certificate justified a synthesized gain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeedbackSelection {
    /// `k_μ` with `k_μ − 1 ≤ μ < k_μ`.
    pub k_mu: usize,
    pub alpha: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(rename = "D")]
    pub d_const: f64,
    #[serde(rename = "C")]
    pub c_const: f64,
    /// `e^{−(k_μ−μ)T} < 1`: contraction of the shifted inequality.
    pub shifted_residual: f64,
    /// `D e^{μT}`: observation constant of the shifted inequality.
    pub shifted_d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeedbackResult {
    pub mu: f64,
    pub riccati_p: DMatrix<f64>,
    /// `K = −BᵀP`, `M×N`.
    pub gain_k: DMatrix<f64>,
    /// Frobenius norm of the Riccati residual.
    pub residual: f64,
    /// `−max Re λ(A + BK)`.
    pub measured_rate: f64,
    /// `measured_rate − μ`, the decay rate of `A + μI + BK`.
    pub shifted_rate: f64,
    /// `max_t ‖e^{(A+BK)t}‖e^{rate·t}` on the sampling grid.
    pub measured_overshoot: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selection: Option<FeedbackSelection>,
}

fn max_real_eig(m: &DMatrix<f64>) -> f64 {
    m.complex_eigenvalues().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
}

fn riccati_residual(at: &DMatrix<f64>, bbt: &DMatrix<f64>, p: &DMatrix<f64>) -> DMatrix<f64> {
    let n = at.nrows();
    at.transpose() * p + p * at - p * bbt * p + DMatrix::identity(n, n)
}

/// Stabilizing solution of the `μ`-shifted Riccati equation.
pub fn solve_shifted_riccati(sys: &LtiSystem, mu: f64) -> Result<FeedbackResult> {
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::InvalidArgument(format!("target rate μ = {mu} must be positive")));
    }
    let n = sys.n_states();
    let at = &sys.a_matrix + DMatrix::identity(n, n) * mu;
    let b = &sys.b_matrix;
    let bbt = b * b.transpose();
    let scale = 1f64.max(spectral_norm(&at)).max(spectral_norm(&bbt));

    // Hautus test on the closed right half-plane; rounding moves defective
    // eigenvalues by ~√ε, hence the loose threshold
    let tol = f64::EPSILON.sqrt() * scale;
    for lam in at.complex_eigenvalues().iter() {
        if lam.re >= -tol && hautus_margin(&at, b, *lam) <= tol {
            return Err(Error::Unstabilizable { re: lam.re, im: lam.im });
        }
    }

    let mut h = CMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            h[(i, j)] = Complex64::new(at[(i, j)], 0.0);
            h[(i, n + j)] = Complex64::new(-bbt[(i, j)], 0.0);
            h[(n + i, n + j)] = Complex64::new(-at[(j, i)], 0.0);
        }
        h[(n + i, i)] = Complex64::new(-1.0, 0.0);
    }
    let (mut q, mut t) = complex_schur(&h)?;
    let stable = reorder_schur(&mut q, &mut t, |z| z.re < 0.0);
    if stable != n {
        return Err(Error::Numerical(format!(
            "Hamiltonian has {stable} stable eigenvalues, expected {n}"
        )));
    }
    let u1 = q.view((0, 0), (n, n)).into_owned();
    let u2 = q.view((n, 0), (n, n)).into_owned();
    // P = U2 U1⁻¹  ⇔  U1ᵀ Pᵀ = U2ᵀ
    let pt = u1
        .transpose()
        .lu()
        .solve(&u2.transpose())
        .ok_or_else(|| Error::Singular("stable invariant subspace is not a graph".into()))?;
    let mut p = symmetrize(&pt.transpose().map(|z| z.re));
    let mut res = riccati_residual(&at, &bbt, &p).norm();

    // Newton–Kleinman refinement
    for _ in 0..4 {
        let acl = &at - &bbt * &p;
        let rhs = DMatrix::identity(n, n) + &p * &bbt * &p;
        let Ok(next) = solve_lyapunov(&acl, &rhs) else { break };
        let r = riccati_residual(&at, &bbt, &next).norm();
        if !(r < res) {
            break;
        }
        p = next;
        res = r;
        if res <= 1e-14 * (1.0 + p.norm()).powi(2) {
            break;
        }
    }

    let gain_k = -(b.transpose() * &p);
    let acl = &sys.a_matrix + b * &gain_k;
    let shifted = (&acl + DMatrix::identity(n, n) * mu).complex_eigenvalues();
    let worst = shifted.iter().copied().max_by(|x, y| x.re.total_cmp(&y.re)).unwrap_or_default();
    if worst.re >= -1e-8 * scale {
        // a mode feedback cannot move: the Hautus test missed it to rounding
        return Err(Error::Unstabilizable { re: worst.re, im: worst.im });
    }
    if !(res <= 1e-8 * (1.0 + p.norm().powi(2))) {
        return Err(Error::Numerical(format!("Riccati residual {res:e} too large for ‖P‖ = {:e}", p.norm())));
    }
    let rate = -max_real_eig(&acl);
    let horizon = (20.0 / rate.max(1e-3)).min(1e3);
    let (_, overshoot) = closed_loop_rate(sys, &gain_k, horizon, 200)?;
    Ok(FeedbackResult {
        mu,
        riccati_p: p,
        gain_k,
        residual: res,
        measured_rate: rate,
        shifted_rate: rate - mu,
        measured_overshoot: overshoot,
        selection: None,
    })
}

/// `(rate, overshoot)` of `A + BK` sampled on `grid + 1` points of `[0, horizon]`.
pub fn closed_loop_rate(sys: &LtiSystem, gain: &DMatrix<f64>, horizon: f64, grid: usize) -> Result<(f64, f64)> {
    if !(horizon > 0.0) {
        return Err(Error::InvalidArgument(format!("horizon {horizon} must be positive")));
    }
    if gain.shape() != (sys.n_inputs(), sys.n_states()) {
        return Err(Error::Dimension(format!(
            "gain must be {}×{}",
            sys.n_inputs(),
            sys.n_states()
        )));
    }
    let acl = &sys.a_matrix + &sys.b_matrix * gain;
    let rate = -max_real_eig(&acl);
    let grid = grid.max(1);
    let overshoot = (0..=grid)
        .map(|i| {
            let t = horizon * i as f64 / grid as f64;
            spectral_norm(&expm_scaled(&acl, t)) * (rate * t).exp()
        })
        .fold(0.0, f64::max);
    Ok((rate, overshoot))
}

/// One piece `u(t) = −Bᵀe^{Aᵀ(start+duration−t)}η` on `[start, start+duration)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ControlSegment {
    pub start: f64,
    pub duration: f64,
    pub eta: Vec<f64>,
    pub l2_norm: f64,
    /// Regularization used when steering only to a ball.
    pub nu: f64,
    pub initial_state: Vec<f64>,
    pub terminal_state: Vec<f64>,
}

/// Piecewise control built from Gramian-steering segments.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ControlSignal {
    pub breakpoints: Vec<f64>,
    pub segments: Vec<ControlSegment>,
    pub l2_norm: f64,
    #[serde(skip)]
    a_matrix: DMatrix<f64>,
    #[serde(skip)]
    b_matrix: DMatrix<f64>,
}

impl ControlSignal {
    /// `u(t)`; zero outside the breakpoints.
    pub fn value(&self, t: f64) -> DVector<f64> {
        let m = self.b_matrix.ncols();
        let Some(seg) = self
            .segments
            .iter()
            .find(|s| t >= s.start && t < s.start + s.duration)
            .or_else(|| self.segments.last().filter(|s| t == s.start + s.duration))
        else {
            return DVector::zeros(m);
        };
        let eta = DVector::from_column_slice(&seg.eta);
        let tau = seg.start + seg.duration - t;
        -(self.b_matrix.transpose() * (expm_scaled(&self.a_matrix.transpose(), tau) * eta))
    }

    pub fn end(&self) -> f64 {
        *self.breakpoints.last().unwrap_or(&0.0)
    }
}

fn solve_spd(m: &DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    m.clone().cholesky().map(|c| c.solve(rhs))
}

fn steer(sys: &LtiSystem, g: &DMatrix<f64>, horizon: f64, eps: f64, y0: &DVector<f64>, start: f64) -> Result<ControlSegment> {
    let n = sys.n_states();
    let z = expm_scaled(&sys.a_matrix, horizon) * y0;
    let target = eps * y0.norm();
    let seg = |eta: DVector<f64>, nu: f64, terminal: DVector<f64>| ControlSegment {
        start,
        duration: horizon,
        l2_norm: eta.dot(&(g * &eta)).max(0.0).sqrt(),
        eta: eta.iter().copied().collect(),
        nu,
        initial_state: y0.iter().copied().collect(),
        terminal_state: terminal.iter().copied().collect(),
    };
    if z.norm() <= target {
        return Ok(seg(DVector::zeros(n), f64::INFINITY, z));
    }
    let gnorm = spectral_norm(g);
    // exact null control when it already suffices
    let exact = {
        let e = g.clone().symmetric_eigen();
        let emin = e.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if emin > 1e-13 * gnorm {
            solve_spd(g, &z)
        } else {
            None
        }
    };
    if eps == 0.0 {
        let eta = exact.ok_or_else(|| Error::Singular("controllability Gramian is singular".into()))?;
        let terminal = &z - g * &eta;
        return Ok(seg(eta, 0.0, terminal));
    }
    let terminal_at = |nu: f64| -> Option<(DVector<f64>, DVector<f64>)> {
        let eta = solve_spd(&(g + DMatrix::identity(n, n) * nu), &z)?;
        let y = &eta * nu;
        Some((eta, y))
    };
    let mut hi = gnorm.max(f64::MIN_POSITIVE);
    let mut grew = 0;
    loop {
        match terminal_at(hi) {
            Some((_, y)) if y.norm() >= target => break,
            _ => {
                hi *= 4.0;
                grew += 1;
                if grew > 400 {
                    return Err(Error::Numerical("could not bracket the regularization".into()));
                }
            }
        }
    }
    let mut lo = 0.0;
    let mut best: Option<(DVector<f64>, DVector<f64>, f64)> = exact.map(|eta| {
        let y = &z - g * &eta;
        (eta, y, 0.0)
    });
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        match terminal_at(mid) {
            Some((eta, y)) if y.norm() <= target => {
                lo = mid;
                best = Some((eta, y, mid));
            }
            _ => hi = mid,
        }
    }
    let (eta, y, nu) = best.ok_or_else(|| Error::Singular("no regularization meets the target".into()))?;
    Ok(seg(eta, nu, y))
}

/// Minimum-norm control steering `y0` into the ball of radius `eps‖y0‖` at time `T`.
pub fn min_norm_eps_null(sys: &LtiSystem, horizon: f64, eps: f64, y0: &DVector<f64>) -> Result<ControlSignal> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::InvalidArgument(format!("horizon {horizon} must be positive")));
    }
    if !(eps >= 0.0) {
        return Err(Error::InvalidArgument(format!("eps = {eps} must be non-negative")));
    }
    if y0.len() != sys.n_states() {
        return Err(Error::Dimension("initial state has the wrong length".into()));
    }
    let g = observability_gramian(sys, horizon, &QuadratureSpec::default())?.matrix;
    let seg = steer(sys, &g, horizon, eps, y0, 0.0)?;
    Ok(ControlSignal {
        breakpoints: vec![0.0, horizon],
        l2_norm: seg.l2_norm,
        segments: vec![seg],
        a_matrix: sys.a_matrix.clone(),
        b_matrix: sys.b_matrix.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayReport {
    /// `‖y(i·t_seg)‖` for `i = 0..=segments`.
    pub state_norms: Vec<f64>,
    /// `‖u_i‖_{L²}` per segment.
    pub control_norms: Vec<f64>,
    /// `‖u_{i+1}‖/‖u_i‖` where defined.
    pub control_ratios: Vec<f64>,
    /// `‖y(i·t_seg)‖ ≤ eps_seg^i‖y0‖(1+1e-9)` for every `i`.
    pub contraction_holds: bool,
    /// `Σ e^{β(i+1)t_seg}‖u_i‖`, an upper bound for `‖e^{β·}u‖_{L²}`.
    pub weighted_norm: f64,
    /// `max_i ‖u_i‖ / (eps_seg^i‖y0‖)`.
    pub per_segment_constant: f64,
    /// `D‖y0‖e^{βt}/(1 − e^{−βt})` with `D` the constant above.
    pub geometric_bound: f64,
}

/// Concatenates `segments` steering controls, each contracting the state by `eps_seg`.
pub fn concatenated_control(
    sys: &LtiSystem,
    beta: f64,
    t_seg: f64,
    eps_seg: f64,
    y0: &DVector<f64>,
    segments: usize,
) -> Result<(ControlSignal, DecayReport)> {
    if !(beta > 0.0) || !(t_seg > 0.0) {
        return Err(Error::InvalidArgument("beta and t_seg must be positive".into()));
    }
    if !(eps_seg > 0.0 && eps_seg < 1.0) {
        return Err(Error::InvalidArgument(format!("eps_seg = {eps_seg} must lie in (0, 1)")));
    }
    let cap = (-2.0 * beta * t_seg).exp();
    if eps_seg > cap * (1.0 + 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "eps_seg = {eps_seg} exceeds e^(-2·beta·t_seg) = {cap}"
        )));
    }
    if y0.len() != sys.n_states() {
        return Err(Error::Dimension("initial state has the wrong length".into()));
    }
    let g = observability_gramian(sys, t_seg, &QuadratureSpec::default())?.matrix;
    let y0n = y0.norm();
    let mut y = y0.clone();
    let mut segs = Vec::with_capacity(segments);
    let mut state_norms = vec![y0n];
    for i in 0..segments {
        let seg = steer(sys, &g, t_seg, eps_seg, &y, i as f64 * t_seg)?;
        y = DVector::from_column_slice(&seg.terminal_state);
        state_norms.push(y.norm());
        segs.push(seg);
    }
    let control_norms: Vec<f64> = segs.iter().map(|s| s.l2_norm).collect();
    let control_ratios = control_norms
        .windows(2)
        .filter(|w| w[0] > 0.0)
        .map(|w| w[1] / w[0])
        .collect();
    let contraction_holds = state_norms
        .iter()
        .enumerate()
        .all(|(i, &s)| s <= eps_seg.powi(i as i32) * y0n * (1.0 + 1e-9));
    let weighted_norm = control_norms
        .iter()
        .enumerate()
        .map(|(i, u)| (beta * (i + 1) as f64 * t_seg).exp() * u)
        .sum();
    let per_segment_constant = if y0n > 0.0 {
        control_norms
            .iter()
            .enumerate()
            .map(|(i, u)| u / (eps_seg.powi(i as i32) * y0n))
            .fold(0.0, f64::max)
    } else {
        0.0
    };
    let geometric_bound = per_segment_constant * y0n * (beta * t_seg).exp() / (1.0 - (-beta * t_seg).exp());
    let l2_norm = control_norms.iter().map(|u| u * u).sum::<f64>().sqrt();
    let breakpoints = (0..=segments).map(|i| i as f64 * t_seg).collect();
    Ok((
        ControlSignal {
            breakpoints,
            segments: segs,
            l2_norm,
            a_matrix: sys.a_matrix.clone(),
            b_matrix: sys.b_matrix.clone(),
        },
        DecayReport {
            state_norms,
            control_norms,
            control_ratios,
            contraction_holds,
            weighted_norm,
            per_segment_constant,
            geometric_bound,
        },
    ))
}

/// Chooses a certified entry that proves stabilizability of the `μ`-shifted
/// system and returns the corresponding Riccati gain.
///
/// With `k_μ − 1 ≤ μ < k_μ`, an entry `(α, T, D, C)` qualifies when
/// `Ce^{−αT} ≤ e^{−k_μT}`; the smallest such `T` is used.
pub fn certificate_to_feedback(sys: &LtiSystem, family: &CertificateFamily, mu: f64) -> Result<FeedbackResult> {
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::InvalidArgument(format!("target rate μ = {mu} must be positive")));
    }
    let k_mu = mu.floor() as usize + 1;
    let km = k_mu as f64;
    let mut pick = None;
    for (it, &t) in family.horizons.iter().enumerate() {
        for ia in 0..family.alphas.len() {
            let c = family.entry(ia, it);
            if c.status != CertificateStatus::Certified || !(c.c_const > 0.0) {
                continue;
            }
            if c.c_const.ln() - c.alpha * t <= -km * t + 1e-12 {
                pick = Some(c);
                break;
            }
        }
        if pick.is_some() {
            break;
        }
    }
    let cert = pick.ok_or_else(|| {
        Error::NoCertificate(format!("no certified entry with C·e^(-αT) ≤ e^(-{k_mu}T)"))
    })?;
    let mut fb = solve_shifted_riccati(sys, mu)?;
    fb.selection = Some(FeedbackSelection {
        k_mu,
        alpha: cert.alpha,
        horizon: cert.horizon,
        d_const: cert.d_const,
        c_const: cert.c_const,
        shifted_residual: (-(km - mu) * cert.horizon).exp(),
        shifted_d: cert.d_const * (mu * cert.horizon).exp(),
    });
    Ok(fb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::build_system;
    use crate::weakobs::{sweep_alpha, ResidualRule, DEFAULT_HORIZONS};
    use approx::assert_relative_eq;

    fn scalar(a: f64, b: f64) -> LtiSystem {
        build_system(DMatrix::from_element(1, 1, a), DMatrix::from_element(1, 1, b)).unwrap()
    }

    #[test]
    fn scalar_riccati() {
        let r = solve_shifted_riccati(&scalar(0.0, 1.0), 1.0).unwrap();
        let s2 = 2f64.sqrt();
        assert_relative_eq!(r.riccati_p[(0, 0)], 1.0 + s2, max_relative = 1e-12);
        assert_relative_eq!(r.gain_k[(0, 0)], -(1.0 + s2), max_relative = 1e-12);
        assert!((r.shifted_rate - s2).abs() < 1e-10);
        assert!((r.measured_rate - (1.0 + s2)).abs() < 1e-10);
    }

    #[test]
    fn lyapunov_case_without_control() {
        let r = solve_shifted_riccati(&scalar(-3.0, 0.0), 1.0).unwrap();
        assert_relative_eq!(r.riccati_p[(0, 0)], 0.25, max_relative = 1e-12);
        assert_eq!(r.gain_k[(0, 0)], 0.0);
        assert_relative_eq!(r.measured_rate, 3.0, max_relative = 1e-12);
    }

    #[test]
    fn unstabilizable_is_reported() {
        let err = solve_shifted_riccati(&scalar(0.0, 0.0), 1.0).unwrap_err();
        assert!(matches!(err, Error::Unstabilizable { re, .. } if (re - 1.0).abs() < 1e-12));
    }

    #[test]
    fn dense_riccati_residual_and_unshift() {
        let a = DMatrix::from_row_slice(3, 3, &[0.5, 1.0, 0.0, -1.0, 0.2, 2.0, 0.3, 0.0, -0.4]);
        let b = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, 0.5, 1.0]);
        let sys = build_system(a, b).unwrap();
        let r = solve_shifted_riccati(&sys, 2.0).unwrap();
        assert!(r.residual <= 1e-8 * (1.0 + r.riccati_p.norm()).powi(2));
        assert!(r.measured_rate >= 2.0 - 1e-8);
        assert!((r.measured_rate - 2.0 - r.shifted_rate).abs() < 1e-12 * r.measured_rate.max(1.0));
        assert!(crate::linalg::sym_min_eig(&r.riccati_p) >= -1e-10);
    }

    #[test]
    fn closed_loop_rate_examples() {
        let sys = build_system(DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -2.0]), DMatrix::zeros(2, 1)).unwrap();
        let (rate, over) = closed_loop_rate(&sys, &DMatrix::zeros(1, 2), 5.0, 100).unwrap();
        assert_relative_eq!(rate, 1.0, max_relative = 1e-12);
        assert_relative_eq!(over, 1.0, max_relative = 1e-12);
        let jordan = build_system(DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 0.0, -1.0]), DMatrix::zeros(2, 1)).unwrap();
        let (rate, over) = closed_loop_rate(&jordan, &DMatrix::zeros(1, 2), 5.0, 100).unwrap();
        assert!((rate - 1.0).abs() < 1e-6);
        assert!(over > 1.5);
    }

    #[test]
    fn scalar_null_control() {
        let u = min_norm_eps_null(&scalar(0.0, 1.0), 1.0, 0.0, &DVector::from_element(1, 1.0)).unwrap();
        assert_relative_eq!(u.l2_norm, 1.0, max_relative = 1e-12);
        assert_relative_eq!(u.value(0.3)[0], -1.0, max_relative = 1e-12);
        assert!(u.segments[0].terminal_state[0].abs() < 1e-14);
    }

    #[test]
    fn free_decay_needs_no_control() {
        let sys = scalar(-1.0, 1.0);
        let u = min_norm_eps_null(&sys, 1.0, 0.5, &DVector::from_element(1, 2.0)).unwrap();
        assert_eq!(u.l2_norm, 0.0);
    }

    #[test]
    fn two_mode_exact_null_control() {
        let sys = build_system(
            DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -2.0]),
            DMatrix::from_row_slice(2, 1, &[1.0, 1.0]),
        )
        .unwrap();
        let y0 = DVector::from_vec(vec![1.0, -0.5]);
        let u = min_norm_eps_null(&sys, 1.0, 0.0, &y0).unwrap();
        let y = DVector::from_column_slice(&u.segments[0].terminal_state);
        assert!(y.norm() < 1e-9);
    }

    #[test]
    fn ball_target_is_met() {
        let sys = scalar(0.5, 1.0);
        let y0 = DVector::from_element(1, 1.0);
        let u = min_norm_eps_null(&sys, 1.0, 0.1, &y0).unwrap();
        let yt = u.segments[0].terminal_state[0].abs();
        assert!(yt <= 0.1 && yt > 0.1 * (1.0 - 1e-9));
    }

    #[test]
    fn concatenation_contracts() {
        let (u, rep) =
            concatenated_control(&scalar(0.0, 1.0), 1.0, 1.0, (-2f64).exp(), &DVector::from_element(1, 1.0), 6).unwrap();
        assert!(rep.contraction_holds);
        assert_eq!(u.breakpoints.len(), 7);
        for r in &rep.control_ratios {
            assert!(*r <= (-2f64).exp() * (1.0 + 1e-6));
        }
        assert!(rep.weighted_norm <= rep.geometric_bound * (1.0 + 1e-12));
    }

    #[test]
    fn concatenation_precondition() {
        let y0 = DVector::from_element(1, 1.0);
        assert!(concatenated_control(&scalar(0.0, 1.0), 1.0, 1.0, 0.2, &y0, 3).is_err());
    }

    #[test]
    fn certificate_selection_follows_k_mu() {
        let sys = scalar(0.0, 1.0);
        let fam = sweep_alpha(&sys, &[1.0, 2.0, 4.0], &DEFAULT_HORIZONS, &ResidualRule::default()).unwrap();
        let fb = certificate_to_feedback(&sys, &fam, 1.5).unwrap();
        let sel = fb.selection.as_ref().unwrap();
        assert_eq!(sel.k_mu, 2);
        assert_eq!(sel.alpha, 2.0);
        assert!(fb.measured_rate >= 1.5);
        assert_eq!(certificate_to_feedback(&sys, &fam, 0.5).unwrap().selection.unwrap().k_mu, 1);
        assert!(certificate_to_feedback(&sys, &fam, 4.0).is_err());
    }
}
