//! Explicit weak-observability constants from a spectral (Lebeau–Robbiano
//! type) splitting, plus numerical estimates of the ingredients: spectral
//! inequality constants, Fattorini distances and the pointwise constant
//! `C(k, T₀)` of the point-controlled heat equation.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{expm_scaled, spectral_norm, sym_eigen};
use crate::systems::{LtiSystem, PointLocation, SpectralSystem, UnboundedConstantsSpec};

/// Nested coordinate projections with their tail decay data.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ProjectionFamily {
    /// Label `k` of each projection.
    pub ks: Vec<usize>,
    /// Retained mode indices (orthonormal basis).
    pub projections: Vec<Vec<usize>>,
    pub m_k: Vec<f64>,
    pub alpha_k: Vec<f64>,
    pub c_k: Option<Vec<f64>>,
    /// `(T₀, [C(k, T₀)])`.
    pub c_k_t0: Option<(f64, Vec<f64>)>,
}

impl ProjectionFamily {
    pub fn position(&self, k: usize) -> Option<usize> {
        self.ks.iter().position(|&x| x == k)
    }
}

/// `‖e^{At}‖ ≤ M e^{δ₀t}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SemigroupBound {
    pub m_big: f64,
    pub delta0: f64,
}

impl SemigroupBound {
    pub fn new(m_big: f64, delta0: f64) -> Result<Self> {
        if !(m_big >= 1.0) || !m_big.is_finite() {
            return Err(Error::InvalidArgument(format!("M = {m_big} must be finite and ≥ 1")));
        }
        if !(delta0 >= 0.0) || !delta0.is_finite() {
            return Err(Error::InvalidArgument(format!("δ₀ = {delta0} must be finite and ≥ 0")));
        }
        Ok(Self { m_big, delta0 })
    }

    /// Fits the bound on `[0, 10]` (200 points) with
    /// `δ₀ = max(0, max Re λ) + 1e-9` and the smallest `M` that works there.
    pub fn fit(sys: &LtiSystem) -> Self {
        let max_re = sys
            .a_matrix
            .complex_eigenvalues()
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max);
        let delta0 = max_re.max(0.0) + 1e-9;
        let m_big = Self::grid(200, 10.0)
            .map(|t| spectral_norm(&expm_scaled(&sys.a_matrix, t)) * (-delta0 * t).exp())
            .fold(1.0, f64::max);
        Self { m_big, delta0 }
    }

    fn grid(points: usize, end: f64) -> impl Iterator<Item = f64> {
        (0..points).map(move |i| end * i as f64 / (points - 1) as f64)
    }

    /// Largest `‖e^{At}‖ / (M e^{δ₀t})` over `t_grid`; at most 1 when the bound holds.
    pub fn worst_ratio(&self, sys: &LtiSystem, t_grid: &[f64]) -> f64 {
        t_grid
            .iter()
            .map(|&t| spectral_norm(&expm_scaled(&sys.a_matrix, t)) / (self.m_big * (self.delta0 * t).exp()))
            .fold(0.0, f64::max)
    }
}

/// A `(D, C)` pair and the horizons it is claimed for.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateConstants {
    pub formula: &'static str,
    pub d: f64,
    pub c: f64,
    /// Smallest valid horizon.
    pub t_min: f64,
    /// Whether `T = t_min` itself is valid.
    pub t_min_inclusive: bool,
}

impl CertificateConstants {
    pub fn valid_at(&self, t: f64) -> bool {
        t > self.t_min || (self.t_min_inclusive && t == self.t_min)
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::InvalidArgument(format!("{name} = {v} must be positive and finite")));
    }
    Ok(())
}

fn non_negative(name: &str, v: f64) -> Result<()> {
    if !(v >= 0.0) || !v.is_finite() {
        return Err(Error::InvalidArgument(format!("{name} = {v} must be non-negative and finite")));
    }
    Ok(())
}

fn compatible(alpha_k: f64, alpha: f64) -> Result<()> {
    positive("alpha", alpha)?;
    if !(alpha_k > alpha) {
        return Err(Error::InvalidArgument(format!(
            "projection decay α_k = {alpha_k} must exceed the target rate α = {alpha}"
        )));
    }
    Ok(())
}

/// Constants from the spectral inequality `‖P_kφ‖ ≤ C_k‖B*P_kφ‖`; valid for `T > 1`.
pub fn constants_b1(
    bound: &SemigroupBound,
    m_k: f64,
    alpha_k: f64,
    c_k: f64,
    b_norm: f64,
    alpha: f64,
) -> Result<CertificateConstants> {
    compatible(alpha_k, alpha)?;
    non_negative("M_k", m_k)?;
    non_negative("C_k", c_k)?;
    non_negative("‖B‖", b_norm)?;
    let (m, d0) = (bound.m_big, bound.delta0);
    Ok(CertificateConstants {
        formula: "spectral-inequality",
        d: 2f64.sqrt() * m * c_k * d0.exp(),
        c: m * m_k * (d0 + alpha).exp() * (2.0 * c_k * c_k * b_norm * b_norm + 1.0).sqrt(),
        t_min: 1.0,
        t_min_inclusive: false,
    })
}

/// Constants from truncated observability `‖P_kS(T₀)*φ‖² ≤ C(k,T₀)∫‖B*S*φ‖²`; valid for `T ≥ 2T₀`.
pub fn constants_b2(
    bound: &SemigroupBound,
    t0: f64,
    c_k_t0: f64,
    m_k: f64,
    alpha_k: f64,
    b_norm: f64,
    alpha: f64,
) -> Result<CertificateConstants> {
    compatible(alpha_k, alpha)?;
    positive("T₀", t0)?;
    non_negative("C(k,T₀)", c_k_t0)?;
    non_negative("M_k", m_k)?;
    non_negative("‖B‖", b_norm)?;
    let (m, d0) = (bound.m_big, bound.delta0);
    let inner = c_k_t0 * b_norm * b_norm * t0 * (2.0 * alpha * t0).exp() + 1.0;
    Ok(CertificateConstants {
        formula: "truncated-observability",
        d: m * (d0 * t0).exp() * c_k_t0.sqrt(),
        c: m * m_k * ((d0 + alpha) * t0).exp() * inner.sqrt(),
        t_min: 2.0 * t0,
        t_min_inclusive: true,
    })
}

/// Truncated-observability constants for an admissible unbounded control
/// operator; valid for `T ≥ 2T₀`.
///
/// The tail decay enters only through the compatibility `α_k > α`, which the
/// caller is expected to have checked when choosing `k`.
pub fn constants_unbounded(
    bound: &SemigroupBound,
    spec: &UnboundedConstantsSpec,
    t0: f64,
    c_k_t0: f64,
    m_k: f64,
    alpha: f64,
) -> Result<CertificateConstants> {
    spec.validate()?;
    positive("alpha", alpha)?;
    positive("T₀", t0)?;
    non_negative("C(k,T₀)", c_k_t0)?;
    non_negative("M_k", m_k)?;
    let (m, d0) = (bound.m_big, bound.delta0);
    let inner = c_k_t0
        * spec.b_norm.powi(2)
        * spec.c_gamma.powi(2)
        * (2.0 * (spec.rho0 + 2.0 * alpha) * t0).exp()
        * t0.powf(1.0 - 2.0 * spec.gamma)
        + 1.0;
    Ok(CertificateConstants {
        formula: "truncated-observability-unbounded",
        d: m * (d0 * t0).exp() * c_k_t0.sqrt(),
        c: m * m_k * ((d0 + alpha) * t0).exp() * inner.sqrt(),
        t_min: 2.0 * t0,
        t_min_inclusive: true,
    })
}

/// `C(T, γ) = ‖B̃‖² C(γ)² e^{2ρ₀T} T^{1−2γ} / (1−2γ)`.
pub fn admissibility_constant(spec: &UnboundedConstantsSpec, horizon: f64) -> Result<f64> {
    spec.validate()?;
    if spec.gamma > 0.499 {
        return Err(Error::InvalidArgument(format!(
            "gamma = {} too close to 1/2: the constant diverges",
            spec.gamma
        )));
    }
    positive("T", horizon)?;
    Ok(spec.b_norm.powi(2) * spec.c_gamma.powi(2) * (2.0 * spec.rho0 * horizon).exp()
        * horizon.powf(1.0 - 2.0 * spec.gamma)
        / (1.0 - 2.0 * spec.gamma))
}

/// `C_k = 1/σ_min(B*|_{range P_k})`, or `+∞` when that map is not injective.
pub fn estimate_spectral_constant(spec: &SpectralSystem, fam: &ProjectionFamily, k: usize) -> Result<f64> {
    let pos = fam
        .position(k)
        .ok_or_else(|| Error::InvalidArgument(format!("family has no projection labelled {k}")))?;
    let idx = &fam.projections[pos];
    if idx.iter().any(|&i| i >= spec.n_modes()) {
        return Err(Error::Dimension("projection index outside the spectral system".into()));
    }
    let m = spec.control_rows.ncols();
    if m < idx.len() {
        return Ok(f64::INFINITY);
    }
    let restricted = DMatrix::from_fn(m, idx.len(), |u, c| spec.control_rows[(idx[c], u)]);
    let sv = restricted.singular_values();
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if smin <= 1e-14 * smax.max(f64::MIN_POSITIVE) {
        return Ok(f64::INFINITY);
    }
    Ok(1.0 / smin)
}

/// `L²(0, T₀)` distance of one exponential to the span of others.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FattoriniDistance {
    pub distance: f64,
    /// Ratio of extreme eigenvalues of the pool's Gram matrix.
    pub condition: f64,
    /// Some Gram eigenvalues fell under the `1e-14‖G‖` floor and were dropped.
    pub regularized: bool,
}

/// `∫₀^{T₀} e^{−st} dt`.
fn decay_integral(s: f64, t0: f64) -> f64 {
    if (s * t0).abs() < 1e-8 {
        t0 - s * t0 * t0 / 2.0
    } else {
        -(-s * t0).exp_m1() / s
    }
}

/// Distance from `e^{−λ_j t}` to `span{e^{−λ_i t} : i ∈ pool}` in `L²(0, T₀)`.
///
/// Indices are 0-based into `lambdas`. Rates of either sign are accepted;
/// on a finite horizon every integral is finite.
pub fn fattorini_distance(lambdas: &[f64], t0: f64, j: usize, pool: &[usize]) -> Result<FattoriniDistance> {
    positive("T₀", t0)?;
    if j >= lambdas.len() || pool.iter().any(|&i| i >= lambdas.len()) {
        return Err(Error::InvalidArgument("rate index out of range".into()));
    }
    if pool.contains(&j) {
        return Err(Error::InvalidArgument(format!("pool must exclude index {j}")));
    }
    if lambdas.iter().any(|l| !l.is_finite()) {
        return Err(Error::NonFinite("decay rates"));
    }
    let gjj = decay_integral(2.0 * lambdas[j], t0);
    if pool.is_empty() {
        return Ok(FattoriniDistance {
            distance: gjj.sqrt(),
            condition: 1.0,
            regularized: false,
        });
    }
    let p = pool.len();
    let g = DMatrix::from_fn(p, p, |a, b| decay_integral(lambdas[pool[a]] + lambdas[pool[b]], t0));
    let v = DMatrix::from_fn(p, 1, |a, _| decay_integral(lambdas[pool[a]] + lambdas[j], t0));
    let eig = sym_eigen(&g);
    let emax = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let emin = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let floor = 1e-14 * emax;
    let mut proj = 0.0;
    let mut regularized = false;
    for (i, &e) in eig.eigenvalues.iter().enumerate() {
        if e <= floor {
            regularized = true;
            continue;
        }
        let c = eig.eigenvectors.column(i).dot(&v.column(0));
        proj += c * c / e;
    }
    let d2 = (gjj - proj).max(0.0);
    Ok(FattoriniDistance {
        distance: d2.sqrt(),
        condition: if emin > 0.0 { emax / emin } else { f64::INFINITY },
        regularized,
    })
}

/// Largest `k` accepted by [`pointwise_c_kt0`]; exponential Gram matrices
/// lose all accuracy beyond this in double precision.
pub const MAX_POINTWISE_MODES: usize = 8;

/// `C(k, T₀) = Σ_{j≤k} e^{−2λ_jT₀} / (d_j² sin²(jπx₀))` with `λ_j = (jπ)² − c`.
///
/// `sin(jπx₀)` is the unnormalized eigenfunction value, which overstates the
/// constant for the `√2 sin` basis by a factor of at most 2 (safe side).
pub fn pointwise_c_kt0(x0: f64, c: f64, k: usize, t0: f64) -> Result<f64> {
    pointwise_c_kt0_at(PointLocation::Real(x0), c, k, t0)
}

pub fn pointwise_c_kt0_at(location: PointLocation, c: f64, k: usize, t0: f64) -> Result<f64> {
    positive("T₀", t0)?;
    if !c.is_finite() {
        return Err(Error::NonFinite("c"));
    }
    if k == 0 {
        return Ok(0.0);
    }
    if k > MAX_POINTWISE_MODES {
        return Err(Error::InvalidArgument(format!(
            "k = {k} exceeds the supported {MAX_POINTWISE_MODES} modes"
        )));
    }
    let sines: Vec<f64> = match location {
        PointLocation::Real(x0) => {
            if !(x0 > 0.0 && x0 < 1.0) {
                return Err(Error::InvalidArgument(format!("x0 = {x0} must lie in (0, 1)")));
            }
            (1..=k).map(|j| (j as f64 * PI * x0).sin()).collect()
        }
        PointLocation::Rational { num, den } => {
            if den == 0 || num == 0 || num >= den {
                return Err(Error::InvalidArgument(format!("x0 = {num}/{den} must lie in (0, 1)")));
            }
            (1..=k as u64)
                .map(|j| {
                    let r = (j as u128 * num as u128) % (2 * den as u128);
                    if r % den as u128 == 0 {
                        0.0
                    } else {
                        (PI * r as f64 / den as f64).sin()
                    }
                })
                .collect()
        }
        PointLocation::ContinuedFraction { depth } => {
            let x0 = crate::systems::continued_fraction_x0(depth)?.x0();
            (1..=k).map(|j| (j as f64 * PI * x0).sin()).collect()
        }
    };
    for (i, s) in sines.iter().enumerate() {
        // a float x₀ like 0.5 leaves sin(2π·x₀) at rounding level
        if s.abs() <= 1e-12 * (i + 1) as f64 {
            return Err(Error::InvisibleMode { index: i + 1 });
        }
    }
    let lambdas: Vec<f64> = (1..=k).map(|j| (j as f64 * PI).powi(2) - c).collect();
    let mut total = 0.0;
    for j in 0..k {
        let pool: Vec<usize> = (0..k).filter(|&i| i != j).collect();
        let d = fattorini_distance(&lambdas, t0, j, &pool)?;
        if d.distance == 0.0 {
            return Err(Error::Singular(format!("mode {} lies in the span of the others", j + 1)));
        }
        total += (-2.0 * lambdas[j] * t0).exp() / (d.distance.powi(2) * sines[j].powi(2));
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{build_system, point_control_heat, spectral_projection_family, CutRule};
    use approx::assert_relative_eq;

    fn unit() -> SemigroupBound {
        SemigroupBound::new(1.0, 0.0).unwrap()
    }

    #[test]
    fn b1_unit_constants() {
        let k = constants_b1(&unit(), 1.0, 2.0, 1.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(k.d, 2f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(k.c, 4.708202236182293, max_relative = 1e-14);
        assert!(!k.valid_at(1.0) && k.valid_at(1.0001));
    }

    #[test]
    fn b1_zero_spectral_constant_limit() {
        let b = SemigroupBound::new(2.0, 0.5).unwrap();
        let k = constants_b1(&b, 3.0, 5.0, 0.0, 1.0, 1.0).unwrap();
        assert_eq!(k.d, 0.0);
        assert_relative_eq!(k.c, 6.0 * 1.5f64.exp(), max_relative = 1e-15);
    }

    #[test]
    fn incompatible_rate_is_rejected() {
        assert!(constants_b1(&unit(), 1.0, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(constants_b2(&unit(), 1.0, 1.0, 1.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn b2_unit_constants() {
        let k = constants_b2(&unit(), 1.0, 1.0, 1.0, 2.0, 1.0, 1.0).unwrap();
        assert_eq!(k.d, 1.0);
        // e·√(e²+1)
        assert_relative_eq!(k.c, 7.873195420671004, max_relative = 1e-14);
        assert!(k.valid_at(2.0) && !k.valid_at(1.99));
    }

    #[test]
    fn b2_limits_and_errors() {
        let k = constants_b2(&unit(), 0.5, 0.0, 2.0, 3.0, 1.0, 1.0).unwrap();
        assert_eq!(k.d, 0.0);
        assert_relative_eq!(k.c, 2.0 * 0.5f64.exp(), max_relative = 1e-15);
        assert!(constants_b2(&unit(), 0.0, 1.0, 1.0, 2.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn unbounded_unit_constants() {
        let s = UnboundedConstantsSpec { gamma: 0.25, rho0: 0.0, c_gamma: 1.0, b_norm: 1.0 };
        let k = constants_unbounded(&unit(), &s, 1.0, 1.0, 1.0, 1.0).unwrap();
        // e·√(e⁴+1)
        assert_relative_eq!(k.c, 20.268642026333822, max_relative = 1e-14);
        let zero = constants_unbounded(&unit(), &UnboundedConstantsSpec { b_norm: 0.0, ..s }, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(zero.c, 1f64.exp(), max_relative = 1e-15);
        assert!(constants_unbounded(&unit(), &UnboundedConstantsSpec { gamma: 0.5, ..s }, 1.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn admissibility_examples() {
        let s = UnboundedConstantsSpec { gamma: 0.25, rho0: 0.0, c_gamma: 1.0, b_norm: 1.0 };
        assert_relative_eq!(admissibility_constant(&s, 1.0).unwrap(), 2.0, max_relative = 1e-15);
        assert!(admissibility_constant(&s, 1e-12).unwrap() < 1e-5);
        assert!(admissibility_constant(&UnboundedConstantsSpec { gamma: 0.4995, ..s }, 1.0).is_err());
    }

    #[test]
    fn semigroup_bound_fit() {
        let diag = build_system(
            DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, -1.0]),
            DMatrix::from_element(2, 1, 1.0),
        )
        .unwrap();
        let b = SemigroupBound::fit(&diag);
        assert_relative_eq!(b.m_big, 1.0, max_relative = 1e-12);
        assert_relative_eq!(b.delta0, 0.5 + 1e-9, max_relative = 1e-15);
        // non-normal transient growth needs M > 1
        let jordan = build_system(
            DMatrix::from_row_slice(2, 2, &[-1.0, 5.0, 0.0, -1.0]),
            DMatrix::from_element(2, 1, 1.0),
        )
        .unwrap();
        let b = SemigroupBound::fit(&jordan);
        assert!(b.m_big > 1.5);
        let grid: Vec<f64> = (0..200).map(|i| i as f64 * 10.0 / 199.0).collect();
        assert!(b.worst_ratio(&jordan, &grid) <= 1.0 + 1e-12);
    }

    #[test]
    fn spectral_constant_examples() {
        let eye = SpectralSystem::new(vec![-1.0, -2.0, -3.0], DMatrix::identity(3, 3), "eye", true).unwrap();
        let fam = spectral_projection_family(&eye, &CutRule::ModeCount).unwrap();
        for &k in &fam.ks {
            assert_relative_eq!(estimate_spectral_constant(&eye, &fam, k).unwrap(), 1.0, max_relative = 1e-14);
        }
        let single = SpectralSystem::new(vec![-1.0, -4.0], DMatrix::from_row_slice(2, 1, &[0.5, 1.0]), "s", false).unwrap();
        let fam = spectral_projection_family(&single, &CutRule::ModeCount).unwrap();
        assert_relative_eq!(estimate_spectral_constant(&single, &fam, 1).unwrap(), 2.0, max_relative = 1e-15);
        let heat = point_control_heat(0.5, 0.0, 5).unwrap();
        let fam = spectral_projection_family(&heat, &CutRule::ModeCount).unwrap();
        assert!(estimate_spectral_constant(&heat, &fam, 2).unwrap().is_infinite());
    }

    #[test]
    fn fattorini_examples() {
        let empty = fattorini_distance(&[1.0], 1.0, 0, &[]).unwrap();
        assert_relative_eq!(empty.distance, ((1.0 - (-2f64).exp()) / 2.0).sqrt(), max_relative = 1e-15);
        let d = fattorini_distance(&[1.0, 2.0], 1.0, 0, &[1]).unwrap();
        let (g11, g12, g22) = (
            (1.0 - (-2f64).exp()) / 2.0,
            (1.0 - (-3f64).exp()) / 3.0,
            (1.0 - (-4f64).exp()) / 4.0,
        );
        assert_relative_eq!(d.distance.powi(2), g11 - g12 * g12 / g22, max_relative = 1e-12);
        let dup = fattorini_distance(&[1.0, 1.0, 3.0], 1.0, 0, &[1, 2]).unwrap();
        assert!(dup.distance < 1e-7);
        assert!(fattorini_distance(&[1.0, 2.0], 1.0, 0, &[0]).is_err());
    }

    #[test]
    fn pointwise_examples() {
        let x0 = 0.5f64.sqrt();
        let d1 = ((1.0 - (-2.0 * PI * PI).exp()) / (2.0 * PI * PI)).sqrt();
        let expect = (-2.0 * PI * PI).exp() / (d1 * d1 * (PI * x0).sin().powi(2));
        assert_relative_eq!(pointwise_c_kt0(x0, 0.0, 1, 1.0).unwrap(), expect, max_relative = 1e-13);
        assert_eq!(pointwise_c_kt0(0.3, 0.0, 0, 1.0).unwrap(), 0.0);
        assert!(matches!(pointwise_c_kt0(0.5, 0.0, 2, 1.0), Err(Error::InvisibleMode { index: 2 })));
        assert!(matches!(
            pointwise_c_kt0_at(PointLocation::Rational { num: 1, den: 3 }, 0.0, 4, 1.0),
            Err(Error::InvisibleMode { index: 3 })
        ));
    }
}
