//! Periodic systems `y' = Ay + B(t)u` with diagonal `A` and a switched,
//! diagonal input operator: mode `n` is observed only on its own windows
//! inside each period.
//!
//! The worked family uses `A = −diag(1, 2, …, N)`, period 1,
//! `a_k = e^{−k²}`, `α = Σ a_k` and `τ_n = (1/α) Σ_{k>n} a_k`. Mode `n` is
//! active while the time left in the current period lies in `(τ_n, τ_{n−1})`,
//! so over one period its observation energy is `∫_{τ_n}^{τ_{n−1}} e^{−2nτ} dτ`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadratureSpec};
use crate::semigroup::exp_integral;
use crate::weakobs::{CertificateStatus, WeakObsProblem, DEFAULT_SAMPLES};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodicSystem {
    pub period: f64,
    pub a_diag: Vec<f64>,
    /// For the worked family `τ_0 = 1 > τ_1 > … > τ_N > 0`; otherwise the
    /// sorted distinct window endpoints.
    pub switch_times: Vec<f64>,
    /// Active windows of each mode inside `[0, period]`.
    pub channel_map: Vec<Vec<(f64, f64)>>,
    /// `Σ e^{−k²}` for the worked family.
    pub alpha_series: Option<f64>,
    /// Bound on the neglected tail of the series.
    pub series_tail_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodicCertificate {
    pub k: usize,
    pub n_k: usize,
    pub c_k: f64,
    pub margin: f64,
    pub status: CertificateStatus,
    pub sufficient_margin: f64,
    pub max_ratio: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<f64>>,
    /// `C(k)√(energy of e_n) + e^{−k n_k 𝕋} − ‖Φ(n_k𝕋,0)*e_n‖` per mode.
    pub per_mode_margins: Vec<f64>,
    /// `e^{k²}a_n` for `1 ≤ n ≤ k` (worked family only).
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub key_fact: Vec<f64>,
}

impl PeriodicSystem {
    pub fn new(period: f64, a_diag: Vec<f64>, channel_map: Vec<Vec<(f64, f64)>>) -> Result<Self> {
        if !(period > 0.0) || !period.is_finite() {
            return Err(Error::InvalidArgument(format!("period {period} must be positive")));
        }
        if a_diag.is_empty() || a_diag.len() != channel_map.len() {
            return Err(Error::Dimension("need one window list per mode".into()));
        }
        if a_diag.iter().any(|a| !a.is_finite()) {
            return Err(Error::NonFinite("a_diag"));
        }
        let mut ends = vec![];
        for w in channel_map.iter().flatten() {
            if !(0.0 <= w.0 && w.0 <= w.1 && w.1 <= period) {
                return Err(Error::InvalidArgument(format!("window {w:?} outside [0, {period}]")));
            }
            ends.extend([w.0, w.1]);
        }
        ends.sort_by(f64::total_cmp);
        ends.dedup();
        Ok(Self {
            period,
            a_diag,
            switch_times: ends,
            channel_map,
            alpha_series: None,
            series_tail_bound: None,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.a_diag.len()
    }

    /// Per-mode observation energy of `e_n` over `m` periods, ending at `m𝕋`.
    pub fn mode_energies(&self, periods: usize) -> Vec<f64> {
        let big_t = periods as f64 * self.period;
        self.a_diag
            .iter()
            .zip(&self.channel_map)
            .map(|(&a, wins)| {
                (0..periods)
                    .map(|k| {
                        let off = k as f64 * self.period;
                        wins.iter()
                            .map(|&(w0, w1)| {
                                let t1 = off + w1;
                                (2.0 * a * (big_t - t1)).exp() * exp_integral(2.0 * a, w1 - w0)
                            })
                            .sum::<f64>()
                    })
                    .sum()
            })
            .collect()
    }
}

/// The worked family with `n` modes, summing `e^{−k²}` through `series_terms`.
pub fn build_example4(n: usize, series_terms: usize) -> Result<PeriodicSystem> {
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one mode".into()));
    }
    if series_terms < n + 2 {
        return Err(Error::InvalidArgument(format!(
            "series_terms = {series_terms} must be at least modes + 2 = {}",
            n + 2
        )));
    }
    let a: Vec<f64> = (1..=series_terms).map(|k| (-((k * k) as f64)).exp()).collect();
    // tails summed smallest-first; tail[j] = Σ_{k>j} a_k
    let mut tail = vec![0.0; series_terms + 1];
    for j in (0..series_terms).rev() {
        tail[j] = tail[j + 1] + a[j];
    }
    let alpha = tail[0];
    let mut tau = vec![1.0];
    tau.extend((1..=n).map(|j| tail[j] / alpha));
    if tau[n] <= 0.0 {
        return Err(Error::InvalidArgument(format!("τ_{n} underflows; use fewer modes")));
    }
    // Σ_{k>K} e^{−k²} ≤ e^{−(K+1)²}/(1 − e^{−(2K+3)})
    let k1 = (series_terms + 1) as f64;
    let tail_bound = (-k1 * k1).exp() / (1.0 - (-(2.0 * k1 + 1.0)).exp());
    let channel_map = (1..=n).map(|j| vec![(1.0 - tau[j - 1], 1.0 - tau[j])]).collect();
    Ok(PeriodicSystem {
        period: 1.0,
        a_diag: (1..=n).map(|j| -(j as f64)).collect(),
        switch_times: tau,
        channel_map,
        alpha_series: Some(alpha),
        series_tail_bound: Some(tail_bound),
    })
}

/// `Φ(t, s)` for `0 ≤ s ≤ t`.
pub fn periodic_evolution(sys: &PeriodicSystem, t: f64, s: f64) -> Result<DMatrix<f64>> {
    if !(0.0 <= s && s <= t) {
        return Err(Error::InvalidArgument(format!("need 0 ≤ s ≤ t, got s = {s}, t = {t}")));
    }
    let d = DVector::from_iterator(sys.n_modes(), sys.a_diag.iter().map(|a| (a * (t - s)).exp()));
    Ok(DMatrix::from_diagonal(&d))
}

/// `∫₀^{m𝕋} ‖B(t)*Φ(m𝕋,t)*ψ‖² dt` in closed form.
pub fn periodic_observation_energy(sys: &PeriodicSystem, periods: usize, psi: &[f64]) -> Result<f64> {
    if periods == 0 {
        return Err(Error::InvalidArgument("need at least one period".into()));
    }
    if psi.len() > sys.n_modes() {
        return Err(Error::Dimension(format!(
            "ψ has {} components but the truncation keeps {} modes",
            psi.len(),
            sys.n_modes()
        )));
    }
    Ok(sys
        .mode_energies(periods)
        .iter()
        .zip(psi)
        .map(|(e, p)| e * p * p)
        .sum())
}

/// The same energy by Gauss–Legendre quadrature on each active window.
pub fn periodic_observation_energy_quadrature(sys: &PeriodicSystem, periods: usize, psi: &[f64]) -> Result<f64> {
    if psi.len() > sys.n_modes() || periods == 0 {
        return Err(Error::Dimension("bad ψ or period count".into()));
    }
    let big_t = periods as f64 * sys.period;
    let spec = QuadratureSpec {
        panels: 4,
        nodes_per_panel: 12,
        adaptive: true,
        rel_tol: 1e-13,
    };
    let mut total = 0.0;
    for (n, &p) in psi.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let a = sys.a_diag[n];
        for k in 0..periods {
            let off = k as f64 * sys.period;
            for &(w0, w1) in &sys.channel_map[n] {
                if w1 > w0 {
                    let (v, _) = integrate(|t| (2.0 * a * (big_t - t)).exp(), off + w0, off + w1, &spec)?;
                    total += p * p * v;
                }
            }
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoncontrollabilityWitness {
    pub n: usize,
    /// `‖φ_m(0; e_n)‖ = e^{−nm}`.
    pub lhs: f64,
    /// `C·√(energy of e_n over m periods)`.
    pub rhs: f64,
    /// `(2/α)e^{−n²}`.
    pub energy_bound: f64,
    pub energy: f64,
}

/// Smallest `n ≥ m + √(m² + 2 ln C + ln(2/α))` and the violated inequality at `e_n`.
pub fn noncontrollability_witness(sys: &PeriodicSystem, m: usize, big_c: f64) -> Result<NoncontrollabilityWitness> {
    let alpha = sys
        .alpha_series
        .ok_or_else(|| Error::InvalidArgument("witness needs the e^(-k²) family".into()))?;
    if !(big_c > 1.0) || !big_c.is_finite() {
        return Err(Error::InvalidArgument(format!("C = {big_c} must exceed 1")));
    }
    if m == 0 {
        return Err(Error::InvalidArgument("need at least one period".into()));
    }
    let mf = m as f64;
    let thresh = mf + (mf * mf + 2.0 * big_c.ln() + (2.0 / alpha).ln()).sqrt();
    let mut n = thresh.ceil() as usize;
    if n as f64 == thresh {
        n += 1;
    }
    if n > sys.n_modes() {
        return Err(Error::InvalidArgument(format!(
            "witness mode {n} exceeds the truncation ({} modes)",
            sys.n_modes()
        )));
    }
    let mut psi = vec![0.0; n];
    psi[n - 1] = 1.0;
    let energy = periodic_observation_energy(sys, m, &psi)?;
    let lhs = (-(n as f64) * mf * sys.period).exp();
    let rhs = big_c * energy.sqrt();
    if !(lhs > rhs) {
        return Err(Error::Numerical(format!("witness e_{n} fails: {lhs} ≤ {rhs}")));
    }
    Ok(NoncontrollabilityWitness {
        n,
        lhs,
        rhs,
        energy_bound: 2.0 / alpha * (-((n * n) as f64)).exp(),
        energy,
    })
}

/// `‖Φ(n_k𝕋,0)*ψ‖ ≤ C(k)‖B*Φ(n_k𝕋,·)*ψ‖ + e^{−k n_k 𝕋}‖ψ‖`, decided like
/// the time-invariant certificates.
pub fn periodic_weakobs_check(sys: &PeriodicSystem, k: usize, n_k: usize, c_k: f64, samples: usize) -> Result<PeriodicCertificate> {
    periodic_weakobs_check_seeded(sys, k, n_k, c_k, samples, 0x5eed)
}

pub fn periodic_weakobs_check_seeded(
    sys: &PeriodicSystem,
    k: usize,
    n_k: usize,
    c_k: f64,
    samples: usize,
    seed: u64,
) -> Result<PeriodicCertificate> {
    if n_k == 0 || !(c_k >= 0.0) {
        return Err(Error::InvalidArgument("need n_k ≥ 1 and C(k) ≥ 0".into()));
    }
    let big_t = n_k as f64 * sys.period;
    let e: Vec<f64> = sys.a_diag.iter().map(|a| (2.0 * a * big_t).exp()).collect();
    let g = sys.mode_energies(n_k);
    let eps = (-(k as f64) * big_t).exp();
    let problem = WeakObsProblem::new(
        DMatrix::from_diagonal(&DVector::from_column_slice(&e)),
        DMatrix::from_diagonal(&DVector::from_column_slice(&g)),
        eps,
    )?;
    let dec = problem.decide(c_k, samples, seed);
    let margin = match dec.status {
        CertificateStatus::Certified => dec.sufficient_margin,
        _ => c_k - dec.max_ratio,
    };
    let per_mode_margins = e.iter().zip(&g).map(|(e, g)| c_k * g.sqrt() + eps - e.sqrt()).collect();
    let key_fact = match sys.alpha_series {
        Some(_) => (1..=k.min(sys.n_modes()))
            .map(|n| ((k * k) as f64 - (n * n) as f64).exp())
            .collect(),
        None => vec![],
    };
    Ok(PeriodicCertificate {
        k,
        n_k,
        c_k,
        margin,
        status: dec.status,
        sufficient_margin: dec.sufficient_margin,
        max_ratio: dec.max_ratio,
        witness: dec.witness,
        per_mode_margins,
        key_fact,
    })
}

/// `C(k) = √α e^{k²/2}` for the worked family.
pub fn example4_constant(sys: &PeriodicSystem, k: usize) -> Result<f64> {
    let alpha = sys
        .alpha_series
        .ok_or_else(|| Error::InvalidArgument("needs the e^(-k²) family".into()))?;
    Ok(alpha.sqrt() * ((k * k) as f64 / 2.0).exp())
}

/// The one-period inequality with `C(k) = √α e^{k²/2}`.
pub fn example4_stabilizability_check(sys: &PeriodicSystem, k: usize, samples: usize) -> Result<PeriodicCertificate> {
    if sys.n_modes() <= k {
        return Err(Error::InvalidArgument(format!(
            "truncation N = {} must exceed k = {k}",
            sys.n_modes()
        )));
    }
    let c = example4_constant(sys, k)?;
    periodic_weakobs_check(sys, k, 1, c, samples.max(1))
}

/// Default sample count for the periodic checks.
pub const PERIODIC_SAMPLES: usize = DEFAULT_SAMPLES;
