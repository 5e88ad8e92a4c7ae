//! Weak observability certificates
//! `‖e^{AᵀT}φ‖ ≤ D‖Bᵀe^{Aᵀ(T−·)}φ‖_{L²(0,T)} + Ce^{−αT}‖φ‖`.
//!
//! With `E = e^{AT}e^{AᵀT}`, `G = G(T)` and `ε = Ce^{−αT}` the inequality
//! reads `√(φᵀEφ) ≤ D√(φᵀGφ) + ε‖φ‖`. Two one-sided tests decide it:
//!
//! * sufficient: `λ_min(D²G + ε²I − E) ≥ 0`, because `√(x² + y²) ≤ x + y`;
//! * necessary: `r(φ) = (√(φᵀEφ) − ε‖φ‖)₊ / √(φᵀGφ) ≤ D` for every `φ`,
//!   searched over random, eigen-directed and locally improved vectors.
//!
//! Anything between the two is reported as inconclusive. The gap is at most
//! a factor `√2` in `D`, and vanishes for `ε = 0`.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{expm_scaled, spectral_norm, sym_eigen, sym_max_eig, sym_min_eig, symmetrize};
use crate::quadrature::QuadratureSpec;
use crate::semigroup::observability_gramian;
use crate::systems::LtiSystem;

pub const DEFAULT_ALPHAS: [f64; 5] = [0.5, 1.0, 2.0, 4.0, 8.0];
pub const DEFAULT_HORIZONS: [f64; 4] = [0.5, 1.0, 2.0, 4.0];
pub const DEFAULT_SAMPLES: usize = 256;

const ASCENT_STEPS: usize = 20;
const ASCENT_STEP: f64 = 0.1;
const ASCENT_STARTS: usize = 6;
/// Bracket search gives up beyond this multiple of the natural scale.
const D_CEILING: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CertificateStatus {
    Certified,
    Refuted,
    Inconclusive,
}

impl CertificateStatus {
    /// Process exit code used by the command-line tool.
    pub fn exit_code(self) -> i32 {
        match self {
            CertificateStatus::Certified => 0,
            CertificateStatus::Refuted => 1,
            CertificateStatus::Inconclusive => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakObsCertificate {
    #[serde(rename = "T")]
    pub horizon: f64,
    pub alpha: f64,
    #[serde(rename = "D")]
    pub d_const: f64,
    #[serde(rename = "C")]
    pub c_const: f64,
    /// Sufficient-test slack when certified, `D − max r` otherwise.
    pub margin: f64,
    pub status: CertificateStatus,
    /// `λ_min(D²G + ε²I − E)`.
    pub sufficient_margin: f64,
    /// Largest `r(φ)` found by the search.
    pub max_ratio: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<f64>>,
}

impl WeakObsCertificate {
    /// An undecided certificate.
    pub fn new(horizon: f64, alpha: f64, d_const: f64, c_const: f64) -> Self {
        Self {
            horizon,
            alpha,
            d_const,
            c_const,
            margin: f64::NAN,
            status: CertificateStatus::Inconclusive,
            sufficient_margin: f64::NAN,
            max_ratio: f64::NAN,
            witness: None,
        }
    }

    /// Residual weight `ε = Ce^{−αT}`.
    pub fn residual(&self) -> f64 {
        self.c_const * (-self.alpha * self.horizon).exp()
    }

    fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(Error::InvalidArgument(format!("horizon {} must be positive", self.horizon)));
        }
        if !(self.alpha > 0.0) {
            return Err(Error::InvalidArgument(format!("alpha {} must be positive", self.alpha)));
        }
        if !(self.d_const >= 0.0) || !(self.c_const >= 0.0) {
            return Err(Error::InvalidArgument("D and C must be non-negative".into()));
        }
        Ok(())
    }
}

/// The quadratic forms of one weak-observability inequality.
#[derive(Debug, Clone)]
pub struct WeakObsProblem {
    /// `φ ↦ ‖S(T)*φ‖²`.
    pub e_form: DMatrix<f64>,
    /// `φ ↦ ∫‖B*S(T−t)*φ‖²`.
    pub g_form: DMatrix<f64>,
    pub eps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub max_ratio: f64,
    pub witness: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub status: CertificateStatus,
    pub sufficient_margin: f64,
    pub max_ratio: f64,
    pub witness: Option<Vec<f64>>,
}

impl WeakObsProblem {
    pub fn new(e_form: DMatrix<f64>, g_form: DMatrix<f64>, eps: f64) -> Result<Self> {
        let n = e_form.nrows();
        if e_form.shape() != (n, n) || g_form.shape() != (n, n) || n == 0 {
            return Err(Error::Dimension("E and G must be square of equal size".into()));
        }
        if !(eps >= 0.0) {
            return Err(Error::InvalidArgument(format!("residual weight {eps} must be non-negative")));
        }
        if e_form.iter().chain(g_form.iter()).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("quadratic forms"));
        }
        Ok(Self {
            e_form: symmetrize(&e_form),
            g_form: symmetrize(&g_form),
            eps,
        })
    }

    pub fn from_system(sys: &LtiSystem, horizon: f64, eps: f64) -> Result<Self> {
        let s = expm_scaled(&sys.a_matrix, horizon);
        let e = &s * s.transpose();
        let g = observability_gramian(sys, horizon, &QuadratureSpec::default())?.matrix;
        Self::new(e, g, eps)
    }

    pub fn dim(&self) -> usize {
        self.e_form.nrows()
    }

    fn quad(m: &DMatrix<f64>, v: &[f64]) -> f64 {
        let n = v.len();
        let mut s = 0.0;
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                row += m[(i, j)] * v[j];
            }
            s += v[i] * row;
        }
        s
    }

    /// `r(φ)`; `+∞` when the observation vanishes but the left side does not.
    pub fn ratio(&self, phi: &[f64]) -> f64 {
        let norm = phi.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        let lhs = Self::quad(&self.e_form, phi).max(0.0).sqrt();
        let num = lhs - self.eps * norm;
        if num <= 0.0 {
            return 0.0;
        }
        let g = Self::quad(&self.g_form, phi);
        if g <= 0.0 {
            return f64::INFINITY;
        }
        num / g.sqrt()
    }

    /// `∇r(φ)` where `r` is smooth and positive.
    fn ratio_gradient(&self, phi: &[f64]) -> Option<Vec<f64>> {
        let v = DVector::from_column_slice(phi);
        let norm = v.norm();
        let ev = &self.e_form * &v;
        let gv = &self.g_form * &v;
        let (e, g) = (v.dot(&ev), v.dot(&gv));
        if !(e > 0.0 && g > 0.0 && norm > 0.0) {
            return None;
        }
        let num = e.sqrt() - self.eps * norm;
        if !(num > 0.0) {
            return None;
        }
        let d_num = ev / e.sqrt() - &v * (self.eps / norm);
        let grad = (d_num * g.sqrt() - gv * (num / g.sqrt())) / g;
        Some(grad.iter().copied().collect())
    }

    /// Slack of the sufficient tests; non-negative means the inequality holds.
    ///
    /// The larger of `λ_min(D²G + ε²I − E)` and the tangent-chord slack
    /// [`Self::tangent_margin`].
    pub fn sufficient_margin(&self, d: f64) -> f64 {
        let n = self.dim();
        let m = &self.g_form * (d * d) + DMatrix::identity(n, n) * (self.eps * self.eps) - &self.e_form;
        let quad = sym_min_eig(&m);
        if quad >= 0.0 || self.eps == 0.0 {
            return quad;
        }
        quad.max(self.tangent_margin(d))
    }

    /// `ε − min_s [λ_max(E/2s − D c₁G) + s/2 − D c₀]`, from `√e ≤ e/2s + s/2`
    /// and the chord `√g ≥ c₀ + c₁g` on `[λ_min(G), λ_max(G)]`.
    /// Exact in one dimension, where the quadratic test loses up to `√2`.
    pub fn tangent_margin(&self, d: f64) -> f64 {
        let emax = sym_max_eig(&self.e_form);
        if !(emax > 0.0) {
            return self.eps;
        }
        let gmin = sym_min_eig(&self.g_form).max(0.0);
        let gmax = sym_max_eig(&self.g_form).max(0.0);
        let (c0, c1) = if gmax > 0.0 {
            let c1 = 1.0 / (gmin.sqrt() + gmax.sqrt());
            ((gmin * gmax).sqrt() * c1, c1)
        } else {
            (0.0, 0.0)
        };
        let m = &self.g_form * (d * c1);
        let f = |ln_s: f64| {
            let s = ln_s.exp();
            sym_max_eig(&(&self.e_form * (0.5 / s) - &m)) + 0.5 * s - d * c0
        };
        // f is convex in s and its minimizer lies below √λ_max(E)
        let (mut lo, mut hi) = (emax.sqrt().ln() - 20.0, emax.sqrt().ln() + 1.0);
        let r = 0.5 * (5f64.sqrt() - 1.0);
        let (mut x1, mut x2) = (hi - r * (hi - lo), lo + r * (hi - lo));
        let (mut f1, mut f2) = (f(x1), f(x2));
        for _ in 0..80 {
            if f1 <= f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - r * (hi - lo);
                f1 = f(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + r * (hi - lo);
                f2 = f(x2);
            }
        }
        self.eps - f1.min(f2)
    }

    /// Directions where the ratio is likely large, independent of `D`.
    fn structured_candidates(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut out = Vec::new();
        for m in [&self.e_form, &self.g_form] {
            let eig = sym_eigen(m);
            for c in eig.eigenvectors.column_iter() {
                out.push(c.iter().copied().collect());
            }
        }
        // pencil (E, G + δI): eigenvectors of L⁻¹EL⁻ᵀ mapped back through L⁻ᵀ
        let gnorm = spectral_norm(&self.g_form);
        let reg = &self.g_form + DMatrix::identity(n, n) * (1e-12 * gnorm);
        if let Some(ch) = reg.cholesky().filter(|_| gnorm > 0.0) {
            let l = ch.l();
            if let Some(linv) = l.clone().try_inverse() {
                let c = &linv * &self.e_form * linv.transpose();
                let eig = sym_eigen(&c);
                let lt_inv = linv.transpose();
                for w in eig.eigenvectors.column_iter() {
                    let v = &lt_inv * w;
                    out.push(v.iter().copied().collect());
                }
            }
        }
        // the relaxed test's worst direction is a witness whenever that test fails
        for scale in [1.0, 2.0] {
            let m = &self.e_form - DMatrix::identity(n, n) * (scale * self.eps * self.eps);
            let eig = sym_eigen(&m);
            let (imax, _) = eig.eigenvalues.argmax();
            out.push(eig.eigenvectors.column(imax).iter().copied().collect());
        }
        out
    }

    fn ascend(&self, start: &[f64]) -> (f64, Vec<f64>) {
        let n = start.len();
        let normalize = |v: &mut Vec<f64>| {
            let s = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if s > 0.0 {
                v.iter_mut().for_each(|x| *x /= s);
            }
        };
        let mut cur = start.to_vec();
        normalize(&mut cur);
        let mut best = (self.ratio(&cur), cur.clone());
        if !best.0.is_finite() {
            return best;
        }
        for _ in 0..ASCENT_STEPS {
            let Some(grad) = self.ratio_gradient(&cur) else { break };
            let gn = grad.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !(gn > 0.0) || !gn.is_finite() {
                break;
            }
            for i in 0..n {
                cur[i] += ASCENT_STEP * grad[i] / gn;
            }
            normalize(&mut cur);
            let r = self.ratio(&cur);
            if r > best.0 {
                best = (r, cur.clone());
                if r.is_infinite() {
                    break;
                }
            }
        }
        best
    }

    /// Maximizes `r(φ)` over random and structured unit vectors, then
    /// improves the best few by local ascent.
    pub fn search(&self, samples: usize, seed: u64, extra: &[Vec<f64>]) -> SearchResult {
        let n = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cands = self.structured_candidates();
        cands.extend(extra.iter().cloned());
        for _ in 0..samples {
            cands.push((0..n).map(|_| StandardNormal.sample(&mut rng)).collect());
        }
        let mut scored: Vec<(f64, Vec<f64>)> = cands
            .into_iter()
            .filter(|v| v.iter().all(|x| x.is_finite()) && v.iter().any(|x| *x != 0.0))
            .map(|v| (self.ratio(&v), v))
            .collect();
        scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));
        let mut best = scored
            .first()
            .cloned()
            .unwrap_or((0.0, vec![1.0; n]));
        if best.0.is_finite() {
            for (r, v) in scored.iter().take(ASCENT_STARTS) {
                if *r <= 0.0 {
                    break;
                }
                let (ra, va) = self.ascend(v);
                if ra > best.0 {
                    best = (ra, va);
                }
            }
        }
        let norm = best.1.iter().map(|x| x * x).sum::<f64>().sqrt();
        let witness = best.1.iter().map(|x| x / norm).collect();
        SearchResult {
            max_ratio: best.0,
            witness,
        }
    }

    /// Two-sided decision for a given `D`.
    pub fn decide(&self, d: f64, samples: usize, seed: u64) -> Decision {
        let suff = self.sufficient_margin(d);
        let n = self.dim();
        let m = &self.g_form * (2.0 * d * d) + DMatrix::identity(n, n) * (2.0 * self.eps * self.eps) - &self.e_form;
        let eig = sym_eigen(&m);
        let (imin, _) = eig.eigenvalues.argmin();
        let extra = vec![eig.eigenvectors.column(imin).iter().copied().collect()];
        let found = self.search(samples, seed, &extra);
        let status = if found.max_ratio > d {
            CertificateStatus::Refuted
        } else if suff >= 0.0 {
            CertificateStatus::Certified
        } else {
            CertificateStatus::Inconclusive
        };
        Decision {
            status,
            sufficient_margin: suff,
            max_ratio: found.max_ratio,
            witness: (status == CertificateStatus::Refuted).then_some(found.witness),
        }
    }

    /// Smallest `D` passing the sufficient test, `+∞` if none is found.
    pub fn sufficient_d(&self, hint: f64) -> f64 {
        if self.sufficient_margin(0.0) >= 0.0 {
            return 0.0;
        }
        let scale = (spectral_norm(&self.e_form) / spectral_norm(&self.g_form).max(f64::MIN_POSITIVE))
            .sqrt()
            .max(f64::MIN_POSITIVE);
        let mut hi = if hint.is_finite() && hint > 0.0 { hint } else { scale };
        let mut lo = 0.0;
        let mut grew = 0;
        while self.sufficient_margin(hi) < 0.0 {
            lo = hi;
            hi *= 2.0;
            grew += 1;
            if hi > D_CEILING * scale.max(hint.min(f64::MAX)) || grew > 200 {
                return f64::INFINITY;
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.sufficient_margin(mid) >= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    /// `(d_lo, d_hi)`: best sampled ratio and smallest sufficient `D`.
    pub fn bracket(&self, samples: usize, seed: u64) -> (f64, f64, SearchResult) {
        let found = self.search(samples, seed, &[]);
        if found.max_ratio.is_infinite() {
            return (f64::INFINITY, f64::INFINITY, found);
        }
        let hi = self.sufficient_d(found.max_ratio);
        (found.max_ratio, hi, found)
    }
}

/// Decides `cert` on `sys` (seed 0).
pub fn check_certificate(sys: &LtiSystem, cert: &WeakObsCertificate, samples: usize) -> Result<WeakObsCertificate> {
    check_certificate_seeded(sys, cert, samples, 0)
}

pub fn check_certificate_seeded(
    sys: &LtiSystem,
    cert: &WeakObsCertificate,
    samples: usize,
    seed: u64,
) -> Result<WeakObsCertificate> {
    cert.validate()?;
    let problem = WeakObsProblem::from_system(sys, cert.horizon, cert.residual())?;
    Ok(apply_decision(cert, problem.decide(cert.d_const, samples, seed)))
}

fn apply_decision(cert: &WeakObsCertificate, dec: Decision) -> WeakObsCertificate {
    let mut out = cert.clone();
    out.status = dec.status;
    out.sufficient_margin = dec.sufficient_margin;
    out.max_ratio = dec.max_ratio;
    out.margin = match dec.status {
        CertificateStatus::Certified => dec.sufficient_margin,
        _ => cert.d_const - dec.max_ratio,
    };
    out.witness = dec.witness;
    out
}

/// `(d_lo, d_hi)` for the inequality with residual weight `eps`.
pub fn optimal_d_bracket(sys: &LtiSystem, horizon: f64, eps: f64, samples: usize) -> Result<(f64, f64)> {
    optimal_d_bracket_seeded(sys, horizon, eps, samples, 0)
}

pub fn optimal_d_bracket_seeded(sys: &LtiSystem, horizon: f64, eps: f64, samples: usize, seed: u64) -> Result<(f64, f64)> {
    if !(horizon > 0.0) {
        return Err(Error::InvalidArgument(format!("horizon {horizon} must be positive")));
    }
    let problem = WeakObsProblem::from_system(sys, horizon, eps)?;
    let (lo, hi, _) = problem.bracket(samples, seed);
    Ok((lo, hi))
}

/// Where `C(α)` comes from in a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule")]
pub enum ResidualRule {
    /// The same `C` for every `α`.
    Constant { c: f64 },
    /// `(α, C(α))` pairs; every swept `α` must appear.
    Table { entries: Vec<(f64, f64)> },
    /// `C(α) = sup_t ‖e^{(A+BK)t}‖e^{αt}` for the Riccati feedback of rate `α`.
    Feedback,
}

impl Default for ResidualRule {
    fn default() -> Self {
        ResidualRule::Constant { c: 1.0 }
    }
}

impl ResidualRule {
    pub fn describe(&self) -> String {
        match self {
            ResidualRule::Constant { c } => format!("constant C = {c}"),
            ResidualRule::Table { .. } => "user table".into(),
            ResidualRule::Feedback => "closed-loop overshoot of the shifted Riccati feedback".into(),
        }
    }

    fn value(&self, sys: &LtiSystem, alpha: f64) -> Result<f64> {
        match self {
            ResidualRule::Constant { c } => Ok(*c),
            ResidualRule::Table { entries } => entries
                .iter()
                .find(|(a, _)| (a - alpha).abs() <= 1e-12 * alpha.abs().max(1.0))
                .map(|e| e.1)
                .ok_or_else(|| Error::InvalidArgument(format!("no C(α) given for α = {alpha}"))),
            ResidualRule::Feedback => {
                let fb = crate::feedback::solve_shifted_riccati(sys, alpha)?;
                let acl = &sys.a_matrix + &sys.b_matrix * &fb.gain_k;
                let gap = (fb.measured_rate - alpha).max(1e-3);
                let t_end = (10.0 / gap).max(10.0);
                let c = (0..=400)
                    .map(|i| {
                        let t = t_end * i as f64 / 400.0;
                        spectral_norm(&expm_scaled(&acl, t)) * (alpha * t).exp()
                    })
                    .fold(1.0, f64::max);
                Ok(c)
            }
        }
    }
}

/// Which form of the statement a family supports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyScope {
    /// One `D(α)` for every horizon on the grid.
    UniformInHorizon,
    /// `D(α, T)` may depend on the horizon, for `T > T₀`.
    HorizonDependent,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaSummary {
    pub alpha: f64,
    #[serde(rename = "C")]
    pub c_const: f64,
    /// Largest per-horizon `D`, usable uniformly on the grid.
    #[serde(rename = "D")]
    pub d_const: f64,
    pub certified: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateFamily {
    pub alphas: Vec<f64>,
    pub horizons: Vec<f64>,
    pub t0: f64,
    /// Row-major over `(α, T)`.
    pub certificates: Vec<WeakObsCertificate>,
    pub per_alpha: Vec<AlphaSummary>,
    pub residual_rule: String,
    pub scope: FamilyScope,
    /// Every `α` certified on every horizon.
    pub certified: bool,
}

impl CertificateFamily {
    pub fn entry(&self, ia: usize, it: usize) -> &WeakObsCertificate {
        &self.certificates[ia * self.horizons.len() + it]
    }

    pub fn overall_status(&self) -> CertificateStatus {
        if self.certified {
            CertificateStatus::Certified
        } else if self.certificates.iter().any(|c| c.status == CertificateStatus::Refuted) {
            CertificateStatus::Refuted
        } else {
            CertificateStatus::Inconclusive
        }
    }
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] > w[0])
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    pub samples: usize,
    pub seed: u64,
    pub t0: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            samples: DEFAULT_SAMPLES,
            seed: 0,
            t0: 0.0,
        }
    }
}

/// Brackets `D(α, T)` on the grid and certifies each entry at its upper end.
pub fn sweep_alpha(sys: &LtiSystem, alphas: &[f64], horizons: &[f64], rule: &ResidualRule) -> Result<CertificateFamily> {
    sweep_alpha_with(sys, alphas, horizons, rule, &SweepOptions::default())
}

pub fn sweep_alpha_with(
    sys: &LtiSystem,
    alphas: &[f64],
    horizons: &[f64],
    rule: &ResidualRule,
    opts: &SweepOptions,
) -> Result<CertificateFamily> {
    if alphas.is_empty() || horizons.is_empty() {
        return Err(Error::InvalidArgument("sweep grids must be non-empty".into()));
    }
    if !strictly_increasing(alphas) || !strictly_increasing(horizons) {
        return Err(Error::InvalidArgument("sweep grids must be strictly increasing".into()));
    }
    if alphas[0] <= 0.0 || horizons[0] <= 0.0 {
        return Err(Error::InvalidArgument("rates and horizons must be positive".into()));
    }
    let residuals: Vec<std::result::Result<f64, String>> = alphas
        .par_iter()
        .map(|&a| rule.value(sys, a).map_err(|e| e.to_string()))
        .collect();
    if let ResidualRule::Table { .. } = rule {
        if let Some(Err(e)) = residuals.iter().find(|r| r.is_err()) {
            return Err(Error::InvalidArgument(e.clone()));
        }
    }
    // Horizon-only data is shared across α.
    let base: Vec<(DMatrix<f64>, DMatrix<f64>)> = horizons
        .par_iter()
        .map(|&t| {
            let s = expm_scaled(&sys.a_matrix, t);
            let g = observability_gramian(sys, t, &QuadratureSpec::default()).map(|g| g.matrix);
            g.map(|g| (&s * s.transpose(), g))
        })
        .collect::<Result<_>>()?;

    let nt = horizons.len();
    let jobs: Vec<(usize, usize)> = (0..alphas.len()).flat_map(|i| (0..nt).map(move |j| (i, j))).collect();
    let certs: Vec<WeakObsCertificate> = jobs
        .par_iter()
        .map(|&(ia, it)| {
            let (alpha, t) = (alphas[ia], horizons[it]);
            let seed = opts.seed ^ ((ia as u64) << 32 | it as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
            let c = match &residuals[ia] {
                Ok(c) => *c,
                Err(_) => return Ok(WeakObsCertificate::new(t, alpha, f64::INFINITY, f64::NAN)),
            };
            let eps = c * (-alpha * t).exp();
            let problem = WeakObsProblem::new(base[it].0.clone(), base[it].1.clone(), eps)?;
            let (lo, hi, found) = problem.bracket(opts.samples, seed);
            let mut cert = WeakObsCertificate::new(t, alpha, hi, c);
            cert.max_ratio = lo;
            if hi.is_finite() {
                cert.sufficient_margin = problem.sufficient_margin(hi);
                cert.margin = cert.sufficient_margin;
                cert.status = if lo > hi * (1.0 + 1e-9) {
                    CertificateStatus::Inconclusive
                } else {
                    CertificateStatus::Certified
                };
            } else if lo.is_infinite() {
                cert.status = CertificateStatus::Refuted;
                cert.margin = f64::NEG_INFINITY;
                cert.witness = Some(found.witness);
            }
            Ok(cert)
        })
        .collect::<Result<_>>()?;

    let per_alpha: Vec<AlphaSummary> = alphas
        .iter()
        .enumerate()
        .map(|(ia, &alpha)| {
            let row = &certs[ia * nt..(ia + 1) * nt];
            let certified = row.iter().all(|c| c.status == CertificateStatus::Certified);
            AlphaSummary {
                alpha,
                c_const: residuals[ia].clone().unwrap_or(f64::NAN),
                d_const: row.iter().map(|c| c.d_const).fold(0.0, f64::max),
                certified,
                note: residuals[ia].clone().err(),
            }
        })
        .collect();
    let certified = per_alpha.iter().all(|a| a.certified);
    Ok(CertificateFamily {
        alphas: alphas.to_vec(),
        horizons: horizons.to_vec(),
        t0: opts.t0,
        certificates: certs,
        per_alpha,
        residual_rule: rule.describe(),
        scope: if opts.t0 > 0.0 {
            FamilyScope::HorizonDependent
        } else {
            FamilyScope::UniformInHorizon
        },
        certified,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SequenceEntry {
    pub k: usize,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(rename = "D")]
    pub d_const: f64,
    /// Rate of the entry used; at least `k + 1`.
    pub alpha: f64,
    #[serde(rename = "C")]
    pub c_const: f64,
}

/// Picks, for each `k ≤ k_max`, the smallest grid horizon `T_k > T₀` with
/// `C(k+1) < e^{T_k}` and sets `D(k) = D(k+1, T_k)`, so that
/// `‖S(T_k)*φ‖ ≤ D(k)‖B*S(T_k−·)*φ‖ + e^{−kT_k}‖φ‖`.
///
/// An entry certified at a larger rate `α ≥ k+1` also qualifies, since its
/// residual `Ce^{−αT}` is no larger.
pub fn discrete_sequence(family: &CertificateFamily, k_max: usize) -> Result<Vec<SequenceEntry>> {
    if !family.certificates.iter().any(|c| c.status == CertificateStatus::Certified) {
        return Err(Error::NoCertificate("family has no certified entry".into()));
    }
    let mut out = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let need = (k + 1) as f64;
        let mut pick: Option<&WeakObsCertificate> = None;
        for (it, &t) in family.horizons.iter().enumerate() {
            if t <= family.t0 {
                continue;
            }
            for (ia, &a) in family.alphas.iter().enumerate() {
                let cert = family.entry(ia, it);
                if a >= need && cert.status == CertificateStatus::Certified && cert.c_const < t.exp() {
                    pick = Some(cert);
                    break;
                }
            }
            if pick.is_some() {
                break;
            }
        }
        let cert = pick.ok_or_else(|| {
            Error::NoCertificate(format!("no certified horizon T > T₀ with C(α) < e^T for α ≥ {need}"))
        })?;
        out.push(SequenceEntry {
            k,
            horizon: cert.horizon,
            d_const: cert.d_const,
            alpha: cert.alpha,
            c_const: cert.c_const,
        });
    }
    Ok(out)
}

/// `‖e^{AᵀT}φ‖` and `√⟨G(T)φ,φ⟩` for a stored vector, recomputed from scratch.
pub fn evaluate_sides(sys: &LtiSystem, horizon: f64, phi: &[f64]) -> Result<(f64, f64)> {
    let v = DVector::from_column_slice(phi);
    let lhs = crate::semigroup::propagate(sys, horizon, &v, true)?.norm();
    let energy = crate::semigroup::observation_energy(sys, horizon, &v, &QuadratureSpec::default())?;
    Ok((lhs, energy.max(0.0).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::build_system;
    use approx::assert_relative_eq;

    fn scalar(a: f64, b: f64) -> LtiSystem {
        build_system(DMatrix::from_element(1, 1, a), DMatrix::from_element(1, 1, b)).unwrap()
    }

    #[test]
    fn stable_without_control_is_certified() {
        let sys = build_system(DMatrix::identity(2, 2) * -2.0, DMatrix::zeros(2, 1)).unwrap();
        for t in [0.5, 1.0, 3.0] {
            let c = check_certificate(&sys, &WeakObsCertificate::new(t, 1.0, 0.0, 1.0), 64).unwrap();
            assert_eq!(c.status, CertificateStatus::Certified, "T = {t}");
        }
    }

    #[test]
    fn undamped_unobserved_mode_is_refuted() {
        let c = check_certificate(&scalar(0.0, 0.0), &WeakObsCertificate::new(2.0, 1.0, 10.0, 1.0), 64).unwrap();
        assert_eq!(c.status, CertificateStatus::Refuted);
        assert!(c.witness.is_some());
        assert!(c.max_ratio.is_infinite());
    }

    #[test]
    fn scalar_unstable_threshold() {
        // exact threshold (e − e⁻²)/√((e²−1)/2) ≈ 1.4451
        let sys = scalar(1.0, 1.0);
        let at = |d| check_certificate(&sys, &WeakObsCertificate::new(1.0, 2.0, d, 1.0), 64).unwrap();
        let refuted = at(1.0);
        assert_eq!(refuted.status, CertificateStatus::Refuted);
        assert_eq!(at(1.5).status, CertificateStatus::Certified);
        let w = refuted.witness.unwrap();
        let (lhs, obs) = evaluate_sides(&sys, 1.0, &w).unwrap();
        assert!(lhs > 1.0 * obs + (-2f64).exp() * w[0].abs());
    }

    #[test]
    fn bracket_examples() {
        let (lo, hi) = optimal_d_bracket(&scalar(0.0, 1.0), 1.0, 0.0, 32).unwrap();
        assert_relative_eq!(lo, 1.0, max_relative = 1e-12);
        assert_relative_eq!(hi, 1.0, max_relative = 1e-12);
        let (lo, hi) = optimal_d_bracket(&scalar(1.0, 1.0), 1.0, 0.0, 32).unwrap();
        assert_relative_eq!(lo, 1.5208666231788148, max_relative = 1e-12);
        assert_relative_eq!(hi, 1.5208666231788148, max_relative = 1e-12);
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 0.3, 0.0, -2.0]);
        let sys = build_system(a, DMatrix::zeros(2, 1)).unwrap();
        assert_eq!(optimal_d_bracket(&sys, 1.0, 1.0, 32).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn sweep_examples() {
        let fam = sweep_alpha(&scalar(0.0, 1.0), &[1.0, 2.0, 4.0], &DEFAULT_HORIZONS, &ResidualRule::default()).unwrap();
        assert!(fam.certified);
        let fam = sweep_alpha(&scalar(0.0, 0.0), &[1.0, 2.0], &DEFAULT_HORIZONS, &ResidualRule::default()).unwrap();
        assert!(fam.per_alpha.iter().all(|a| !a.certified));
        assert_eq!(fam.overall_status(), CertificateStatus::Refuted);
        let sys = build_system(
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -10.0]),
            DMatrix::from_row_slice(2, 1, &[1.0, 0.0]),
        )
        .unwrap();
        let fam = sweep_alpha(&sys, &DEFAULT_ALPHAS, &DEFAULT_HORIZONS, &ResidualRule::default()).unwrap();
        assert!(fam.certified);
    }

    #[test]
    fn sweep_records_rule_and_rejects_bad_grids() {
        let sys = scalar(0.0, 1.0);
        assert!(sweep_alpha(&sys, &[2.0, 1.0], &[1.0], &ResidualRule::default()).is_err());
        assert!(sweep_alpha(&sys, &[], &[1.0], &ResidualRule::default()).is_err());
        let table = ResidualRule::Table { entries: vec![(1.0, 2.0)] };
        assert!(sweep_alpha(&sys, &[1.0, 2.0], &[1.0], &table).is_err());
        let fam = sweep_alpha(&sys, &[1.0], &[1.0], &table).unwrap();
        assert_eq!(fam.residual_rule, "user table");
        assert_eq!(fam.per_alpha[0].c_const, 2.0);
    }

    #[test]
    fn feedback_rule_gives_overshoot_constant() {
        let fam = sweep_alpha(&scalar(0.0, 1.0), &[1.0, 2.0], &[1.0, 2.0], &ResidualRule::Feedback).unwrap();
        assert!(fam.certified);
        // scalar closed loop has no transient growth
        for a in &fam.per_alpha {
            assert_relative_eq!(a.c_const, 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn sequence_picker() {
        let sys = scalar(0.0, 1.0);
        let fam = sweep_alpha(&sys, &[2.0, 3.0], &DEFAULT_HORIZONS, &ResidualRule::default()).unwrap();
        let seq = discrete_sequence(&fam, 2).unwrap();
        assert_eq!(seq[0].horizon, 0.5);
        assert_eq!(seq[1].alpha, 3.0);
        let e3 = ResidualRule::Table { entries: vec![(2.0, 3f64.exp())] };
        let fam = sweep_alpha(&sys, &[2.0], &DEFAULT_HORIZONS, &e3).unwrap();
        assert_eq!(discrete_sequence(&fam, 1).unwrap()[0].horizon, 4.0);
        let dead = sweep_alpha(&scalar(0.0, 0.0), &[2.0], &[1.0], &ResidualRule::default()).unwrap();
        assert!(discrete_sequence(&dead, 1).is_err());
    }
}
