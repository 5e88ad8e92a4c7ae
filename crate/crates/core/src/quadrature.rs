//! Composite Gauss–Legendre quadrature with adaptive panel bisection.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Panel layout and tolerance for the composite rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub panels: usize,
    pub nodes_per_panel: usize,
    pub adaptive: bool,
    pub rel_tol: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            panels: 32,
            nodes_per_panel: 8,
            adaptive: true,
            rel_tol: 1e-10,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.panels < 1 {
            return Err(Error::InvalidArgument("quadrature needs at least one panel".into()));
        }
        if self.nodes_per_panel < 2 {
            return Err(Error::InvalidArgument("quadrature needs at least two nodes per panel".into()));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::InvalidArgument("quadrature rel_tol must be positive".into()));
        }
        Ok(())
    }
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, refined by Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

struct Rule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Rule {
    fn apply<F>(&self, f: &F, a: f64, b: f64, dim: usize) -> Vec<f64>
    where
        F: Fn(f64) -> Vec<f64>,
    {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = vec![0.0; dim];
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let v = f(mid + half * x);
            for (s, vi) in acc.iter_mut().zip(v) {
                *s += w * half * vi;
            }
        }
        acc
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn diff_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Integrates a vector-valued function over `[a, b]`.
///
/// Returns the integral and an error estimate (norm of the difference
/// between each panel's one-panel and two-half-panel values, summed).
pub fn integrate_vec<F>(f: F, a: f64, b: f64, dim: usize, spec: &QuadratureSpec) -> Result<(Vec<f64>, f64)>
where
    F: Fn(f64) -> Vec<f64> + Sync,
{
    spec.validate()?;
    if b == a {
        return Ok((vec![0.0; dim], 0.0));
    }
    let (nodes, weights) = gauss_legendre(spec.nodes_per_panel);
    let rule = Rule { nodes, weights };
    let h = (b - a) / spec.panels as f64;

    let coarse: Vec<(Vec<f64>, Vec<f64>, f64, f64)> = (0..spec.panels)
        .into_par_iter()
        .map(|p| {
            let lo = a + h * p as f64;
            let hi = if p + 1 == spec.panels { b } else { lo + h };
            let whole = rule.apply(&f, lo, hi, dim);
            let mid = 0.5 * (lo + hi);
            let mut split = rule.apply(&f, lo, mid, dim);
            for (s, v) in split.iter_mut().zip(rule.apply(&f, mid, hi, dim)) {
                *s += v;
            }
            (whole, split, lo, hi)
        })
        .collect();

    let mut total = vec![0.0; dim];
    for (_, split, _, _) in &coarse {
        for (t, v) in total.iter_mut().zip(split) {
            *t += v;
        }
    }
    let scale = norm(&total);
    let target = spec.rel_tol * scale;

    let refined: Vec<(Vec<f64>, f64)> = coarse
        .into_par_iter()
        .map(|(whole, split, lo, hi)| {
            let err = diff_norm(&whole, &split);
            if !spec.adaptive {
                return (split, err);
            }
            let local = target * (hi - lo) / (b - a);
            refine(&rule, &f, lo, hi, split, err, local, dim, 0)
        })
        .collect();

    let mut value = vec![0.0; dim];
    let mut err = 0.0;
    for (v, e) in refined {
        err += e;
        for (t, x) in value.iter_mut().zip(v) {
            *t += x;
        }
    }
    if spec.adaptive && err > target.max(f64::MIN_POSITIVE) && err > 1e-15 * norm(&value) {
        return Err(Error::Quadrature {
            tol: spec.rel_tol,
            estimate: err / norm(&value).max(f64::MIN_POSITIVE),
        });
    }
    Ok((value, err))
}

#[allow(clippy::too_many_arguments)]
fn refine<F>(
    rule: &Rule,
    f: &F,
    lo: f64,
    hi: f64,
    value: Vec<f64>,
    err: f64,
    local_tol: f64,
    dim: usize,
    depth: usize,
) -> (Vec<f64>, f64)
where
    F: Fn(f64) -> Vec<f64>,
{
    if err <= local_tol || depth >= 30 {
        return (value, err);
    }
    let mid = 0.5 * (lo + hi);
    let mut halves = Vec::with_capacity(2);
    for (l, r) in [(lo, mid), (mid, hi)] {
        let whole = rule.apply(f, l, r, dim);
        let m = 0.5 * (l + r);
        let mut split = rule.apply(f, l, m, dim);
        for (s, v) in split.iter_mut().zip(rule.apply(f, m, r, dim)) {
            *s += v;
        }
        let e = diff_norm(&whole, &split);
        halves.push(refine(rule, f, l, r, split, e, 0.5 * local_tol, dim, depth + 1));
    }
    let (right, er) = halves.pop().unwrap();
    let (mut left, el) = halves.pop().unwrap();
    for (x, y) in left.iter_mut().zip(right) {
        *x += y;
    }
    (left, el + er)
}

/// Scalar convenience wrapper around [`integrate_vec`].
pub fn integrate<F>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<(f64, f64)>
where
    F: Fn(f64) -> f64 + Sync,
{
    let (v, e) = integrate_vec(|t| vec![f(t)], a, b, 1, spec)?;
    Ok((v[0], e))
}
