//! Modal truncations of the heat-type examples.
//!
//! All bases are orthonormal: `√2 sin(jπx)` on `(0, 1)` and the normalized
//! Hermite functions on the line.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{continued_fraction_x0, SpectralSystem};
use crate::error::{Error, Result};
use crate::quadrature::{integrate_vec, QuadratureSpec};

/// Location of a point actuator on `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointLocation {
    Real(f64),
    /// `num/den`; modes with `j·num ≡ 0 (mod den)` get an exact zero row.
    Rational { num: u64, den: u64 },
    /// Last exact convergent of the continued fraction with `a_n = ⌊e^{q_n³}⌋ + 1`.
    ContinuedFraction { depth: usize },
}

/// `y_t = y_xx + c y + δ_{x₀} u` on `(0, 1)` with Dirichlet conditions.
pub fn point_control_heat(x0: f64, c: f64, n_modes: usize) -> Result<SpectralSystem> {
    point_control_heat_at(PointLocation::Real(x0), c, n_modes)
}

pub fn point_control_heat_at(location: PointLocation, c: f64, n_modes: usize) -> Result<SpectralSystem> {
    if n_modes == 0 {
        return Err(Error::InvalidArgument("n_modes must be at least 1".into()));
    }
    if !c.is_finite() {
        return Err(Error::NonFinite("c"));
    }
    let (rows, desc): (Vec<f64>, String) = match location {
        PointLocation::Real(x0) => {
            if !(x0 > 0.0 && x0 < 1.0) {
                return Err(Error::InvalidArgument(format!("x0 = {x0} must lie in (0, 1)")));
            }
            let rows = (1..=n_modes).map(|j| 2f64.sqrt() * (j as f64 * PI * x0).sin()).collect();
            (rows, format!("x0={x0}"))
        }
        PointLocation::Rational { num, den } => {
            if den == 0 || num == 0 || num >= den {
                return Err(Error::InvalidArgument(format!("x0 = {num}/{den} must lie in (0, 1)")));
            }
            let rows = (1..=n_modes as u64)
                .map(|j| {
                    // reduce jπ·num/den modulo 2π before evaluating
                    let r = (j as u128 * num as u128) % (2 * den as u128);
                    if r % den as u128 == 0 {
                        0.0
                    } else {
                        2f64.sqrt() * (PI * r as f64 / den as f64).sin()
                    }
                })
                .collect();
            (rows, format!("x0={num}/{den}"))
        }
        PointLocation::ContinuedFraction { depth } => {
            let cf = continued_fraction_x0(depth)?;
            let (p, q) = cf.last_exact_convergent();
            let x0 = p as f64 / q as f64;
            let rows = (1..=n_modes).map(|j| 2f64.sqrt() * (j as f64 * PI * x0).sin()).collect();
            (rows, format!("x0≈{p}/{q} (continued fraction, depth {depth})"))
        }
    };
    let eig = (1..=n_modes).map(|j| -(j as f64 * PI).powi(2) + c).collect();
    SpectralSystem::new(
        eig,
        DMatrix::from_vec(n_modes, 1, rows),
        format!("point-control heat on (0,1), {desc}, c={c}, basis √2·sin(jπx)"),
        false,
    )
}

/// Merges a list of intervals, rejecting empty or malformed ones.
fn normalize_set(set: &[(f64, f64)]) -> Result<Vec<(f64, f64)>> {
    if set.is_empty() {
        return Err(Error::InvalidArgument("control set is empty".into()));
    }
    let mut v = set.to_vec();
    for &(lo, hi) in &v {
        if lo.is_nan() || hi.is_nan() || lo >= hi {
            return Err(Error::InvalidArgument(format!("bad interval ({lo}, {hi})")));
        }
    }
    v.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(v.len());
    for (lo, hi) in v {
        match out.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => out.push((lo, hi)),
        }
    }
    Ok(out)
}

/// `h_0(x), …, h_{n−1}(x)` via the stable three-term recurrence.
pub fn hermite_functions(x: f64, n: usize) -> Vec<f64> {
    let mut h = Vec::with_capacity(n);
    if n == 0 {
        return h;
    }
    h.push(PI.powf(-0.25) * (-0.5 * x * x).exp());
    if n > 1 {
        h.push(2f64.sqrt() * x * h[0]);
    }
    for k in 1..n.saturating_sub(1) {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * x * h[k] - (kf / (kf + 1.0)).sqrt() * h[k - 1];
        h.push(next);
    }
    h
}

/// `y_t = y_xx − x² y + c y + χ_E u` on the line, one space dimension.
///
/// `B_jk = ∫_E h_j h_k`, integrated by adaptive Gauss–Legendre on `E`
/// clipped to where the first `n` Hermite functions are non-negligible.
pub fn hermite_heat(c: f64, set: &[(f64, f64)], n_modes: usize) -> Result<SpectralSystem> {
    if n_modes == 0 {
        return Err(Error::InvalidArgument("n_modes must be at least 1".into()));
    }
    if !(c >= 1.0) || !c.is_finite() {
        return Err(Error::InvalidArgument(format!("c = {c} must be finite and at least 1")));
    }
    let set = normalize_set(set)?;
    let reach = (2.0 * n_modes as f64 + 1.0).sqrt() + 10.0;
    let pairs = n_modes * (n_modes + 1) / 2;
    let mut acc = vec![0.0; pairs];
    for &(lo, hi) in &set {
        let (lo, hi) = (lo.max(-reach), hi.min(reach));
        if lo >= hi {
            continue;
        }
        let spec = QuadratureSpec {
            panels: ((hi - lo) * 2.0).ceil().max(4.0) as usize,
            nodes_per_panel: 20,
            adaptive: true,
            rel_tol: 1e-13,
        };
        let (v, _) = integrate_vec(
            |x| {
                let h = hermite_functions(x, n_modes);
                let mut out = Vec::with_capacity(pairs);
                for j in 0..n_modes {
                    for k in j..n_modes {
                        out.push(h[j] * h[k]);
                    }
                }
                out
            },
            lo,
            hi,
            pairs,
            &spec,
        )?;
        for (a, x) in acc.iter_mut().zip(v) {
            *a += x;
        }
    }
    let mut b = DMatrix::zeros(n_modes, n_modes);
    let mut idx = 0;
    for j in 0..n_modes {
        for k in j..n_modes {
            b[(j, k)] = acc[idx];
            b[(k, j)] = acc[idx];
            idx += 1;
        }
    }
    let eig = (0..n_modes).map(|k| -(2.0 * k as f64 + 1.0) + c).collect();
    SpectralSystem::new(
        eig,
        b,
        format!("Hermite heat on R, c={c}, E={set:?}, basis normalized Hermite functions"),
        true,
    )
}

/// `y_t = −(−Δ)^s y + c y + χ_E u` on `(0, 1)`, `0 < s < 1`.
pub fn fractional_heat(s: f64, c: f64, set: &[(f64, f64)], n_modes: usize) -> Result<SpectralSystem> {
    if n_modes == 0 {
        return Err(Error::InvalidArgument("n_modes must be at least 1".into()));
    }
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidArgument(format!("order s = {s} must lie in (0, 1)")));
    }
    if !(c >= 0.0) || !c.is_finite() {
        return Err(Error::InvalidArgument(format!("c = {c} must be finite and non-negative")));
    }
    let set = normalize_set(set)?;
    if set.iter().any(|&(lo, hi)| lo < 0.0 || hi > 1.0) {
        return Err(Error::InvalidArgument("control set must lie inside [0, 1]".into()));
    }
    // 2∫ sin(jπx) sin(kπx) = ∫ cos((j−k)πx) − cos((j+k)πx)
    let prim = |m: i64, x: f64| -> f64 {
        if m == 0 {
            x
        } else {
            (m as f64 * PI * x).sin() / (m as f64 * PI)
        }
    };
    let b = DMatrix::from_fn(n_modes, n_modes, |r, q| {
        let (j, k) = (r as i64 + 1, q as i64 + 1);
        set.iter()
            .map(|&(lo, hi)| (prim(j - k, hi) - prim(j - k, lo)) - (prim(j + k, hi) - prim(j + k, lo)))
            .sum()
    });
    let eig = (1..=n_modes).map(|j| -(j as f64 * PI).powf(s) + c).collect();
    SpectralSystem::new(
        eig,
        b,
        format!("fractional heat on (0,1), s={s}, c={c}, E={set:?}, basis √2·sin(jπx)"),
        true,
    )
}
