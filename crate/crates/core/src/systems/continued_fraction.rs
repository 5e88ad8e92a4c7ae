//! The badly-approximable-by-design point `x₀ = [0; 2, a₂, a₃, …]` with
//! `a_n = ⌊e^{q_n³}⌋ + 1`.
//!
//! Indexing follows the recurrence `q_{n+1} = a_n q_n + q_{n−1}` with seeds
//! `q₀ = 0, q₁ = 1` (and `p₀ = 1, p₁ = 0`), so `p_n/q_n` is the `n`-th
//! convergent for `n ≥ 1`. The terms explode after `a₂ = 2981`; from there
//! only logarithms are tracked.

use serde::Serialize;

use crate::error::{Error, Result};

/// Default cap on `q³` for attempting an exact `a_n`.
pub const DEFAULT_GUARD: f64 = 700.0;

/// Floats represent every integer below this exactly.
const EXACT_FLOAT_LIMIT: f64 = 4_503_599_627_370_496.0; // 2^52

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuedFractionX0 {
    pub depth: usize,
    pub guard: f64,
    /// `a_0..=a_depth`; `None` once only the logarithm is known.
    pub partial_quotients: Vec<Option<u128>>,
    /// `ln a_n` (−∞ for `a₀ = 0`); may overflow to +∞ from `a₄` on.
    pub log_partial_quotients: Vec<f64>,
    /// `ln ln a_n` for `n ≥ 2`, finite one level further than `ln a_n`.
    pub log_log_partial_quotients: Vec<f64>,
    /// `(p_n, q_n)` for `n = 0..=depth+1` while exact.
    pub convergents: Vec<Option<(u128, u128)>>,
    /// `ln q_n` for `n = 0..=depth+1`.
    pub log_q: Vec<f64>,
    /// Indices whose `a_n` is stored only as `ln a_n ≈ q_n³`.
    pub approximated: Vec<usize>,
}

pub fn continued_fraction_x0(depth: usize) -> Result<ContinuedFractionX0> {
    continued_fraction_x0_with_guard(depth, DEFAULT_GUARD)
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY || hi == f64::INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// Exact `⌊e^{x}⌋ + 1` when it is unambiguous in double precision.
fn exact_partial_quotient(cube: u128, guard: f64) -> Option<u128> {
    let x = cube as f64;
    if x > guard {
        return None;
    }
    let e = x.exp();
    if !(e < EXACT_FLOAT_LIMIT) {
        return None;
    }
    let fl = e.floor();
    // refuse if e^x sits too close to an integer to trust the floor
    let frac = e - fl;
    if frac < 1e-6 || frac > 1.0 - 1e-6 {
        return None;
    }
    Some(fl as u128 + 1)
}

pub fn continued_fraction_x0_with_guard(depth: usize, guard: f64) -> Result<ContinuedFractionX0> {
    if depth < 2 {
        return Err(Error::InvalidArgument(format!("depth = {depth} must be at least 2")));
    }
    if !(guard > 0.0) {
        return Err(Error::InvalidArgument("overflow guard must be positive".into()));
    }
    let mut a: Vec<Option<u128>> = vec![Some(0), Some(2)];
    let mut log_a = vec![f64::NEG_INFINITY, 2f64.ln()];
    let mut loglog_a = vec![f64::NAN, 2f64.ln().ln()];
    let mut pq: Vec<Option<(u128, u128)>> = vec![Some((1, 0)), Some((0, 1))];
    let mut log_q = vec![f64::NEG_INFINITY, 0.0];
    let mut approximated = Vec::new();

    for n in 1..=depth {
        if n >= 2 {
            // a_n from q_n
            let exact = pq[n]
                .and_then(|(_, q)| q.checked_mul(q).and_then(|s| s.checked_mul(q)))
                .and_then(|cube| exact_partial_quotient(cube, guard));
            match exact {
                Some(v) => {
                    a.push(Some(v));
                    log_a.push((v as f64).ln());
                    loglog_a.push((v as f64).ln().ln());
                }
                None => {
                    a.push(None);
                    // ln a_n ≈ q_n³, exact in floating point while q_n is
                    let cube = match pq[n] {
                        Some((_, q)) => (q as f64).powi(3),
                        None => (3.0 * log_q[n]).exp(),
                    };
                    log_a.push(cube);
                    loglog_a.push(3.0 * log_q[n]);
                    approximated.push(n);
                }
            }
        }
        // q_{n+1} = a_n q_n + q_{n−1}
        let next = match (a[n], pq[n], pq[n - 1]) {
            (Some(an), Some((p1, q1)), Some((p0, q0))) => an
                .checked_mul(q1)
                .and_then(|x| x.checked_add(q0))
                .zip(an.checked_mul(p1).and_then(|x| x.checked_add(p0))),
            _ => None,
        };
        pq.push(next.map(|(q, p)| (p, q)));
        let lq = match next {
            Some((q, _)) => (q as f64).ln(),
            None => log_add_exp(log_a[n] + log_q[n], log_q[n - 1]),
        };
        log_q.push(lq);
    }

    Ok(ContinuedFractionX0 {
        depth,
        guard,
        partial_quotients: a,
        log_partial_quotients: log_a,
        log_log_partial_quotients: loglog_a,
        convergents: pq,
        log_q,
        approximated,
    })
}

impl ContinuedFractionX0 {
    /// Highest-index exact convergent with `q > 0`.
    pub fn last_exact_convergent(&self) -> (u128, u128) {
        self.convergents
            .iter()
            .rev()
            .flatten()
            .find(|(_, q)| *q > 0)
            .copied()
            .expect("q₁ = 1 is always exact")
    }

    /// `x₀` rounded to double precision.
    pub fn x0(&self) -> f64 {
        let (p, q) = self.last_exact_convergent();
        p as f64 / q as f64
    }

    /// Checks `|x₀ − p_n/q_n| < 1/(q_n q_{n+1})` for an index whose
    /// neighbours are exact; `None` if the terms are not available.
    ///
    /// With `x₀ = (p_{n+1}ξ + p_n)/(q_{n+1}ξ + q_n)`, `ξ > 0`, the error is
    /// `ξ/(q_n(q_{n+1}ξ + q_n))`, so the bound follows from the determinant
    /// identity `|p_{n+1}q_n − p_n q_{n+1}| = 1` together with `q_n ≥ 1`.
    pub fn convergent_bound_holds(&self, n: usize) -> Option<bool> {
        if n == 0 {
            return None;
        }
        let (pn, qn) = (*self.convergents.get(n)?)?;
        let (pm, qm) = (*self.convergents.get(n + 1)?)?;
        let det = (pm as i128) * (qn as i128) - (pn as i128) * (qm as i128);
        let tail_positive = match self.partial_quotients.get(n + 1) {
            Some(Some(v)) => *v >= 1,
            Some(None) => self.log_partial_quotients[n + 1] > 0.0,
            None => true, // the expansion is infinite by construction
        };
        let structural = det.abs() == 1 && qn >= 1 && qm > qn && tail_positive;
        // float sanity on the rounded x₀
        let err = (self.x0() - pn as f64 / qn as f64).abs();
        let bound = 1.0 / (qn as f64 * qm as f64);
        Some(structural && err <= bound * (1.0 + 1e-12))
    }

    /// `(n, holds)` for every index where the check is available.
    pub fn convergent_bound_checks(&self) -> Vec<(usize, bool)> {
        (1..self.convergents.len())
            .filter_map(|n| self.convergent_bound_holds(n).map(|h| (n, h)))
            .collect()
    }
}
