//! Dense linear-algebra helpers on top of nalgebra: matrix exponentials,
//! symmetric spectra, ordered complex Schur forms and Lyapunov solves.

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// True when every off-diagonal entry is exactly zero.
pub fn is_diagonal(a: &DMatrix<f64>) -> bool {
    let (r, c) = a.shape();
    (0..r).all(|i| (0..c).all(|j| i == j || a[(i, j)] == 0.0))
}

/// `e^{A t}`; diagonal generators are exponentiated entrywise.
pub fn expm_scaled(a: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    let n = a.nrows();
    if t == 0.0 {
        return DMatrix::identity(n, n);
    }
    if is_diagonal(a) {
        return DMatrix::from_diagonal(&DVector::from_fn(n, |i, _| (a[(i, i)] * t).exp()));
    }
    // Padé scaling-and-squaring (nalgebra's port of Higham's expm).
    (a * t).exp()
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Eigen-decomposition of the symmetric part of `m`.
pub fn sym_eigen(m: &DMatrix<f64>) -> SymmetricEigen<f64, nalgebra::Dyn> {
    SymmetricEigen::new(symmetrize(m))
}

pub fn sym_min_eig(m: &DMatrix<f64>) -> f64 {
    sym_eigen(m).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

pub fn sym_max_eig(m: &DMatrix<f64>) -> f64 {
    sym_eigen(m).eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().iter().copied().fold(0.0, f64::max)
}

pub fn min_singular_value(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().iter().copied().fold(f64::INFINITY, f64::min)
}

pub fn to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Complex Schur form `M = Q T Qᴴ` with `T` upper triangular.
pub fn complex_schur(m: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    let n = m.nrows();
    let schur = Schur::try_new(m.clone(), 1e-15, 100_000)
        .ok_or_else(|| Error::Numerical("complex Schur iteration did not converge".into()))?;
    let (q, mut t) = schur.unpack();
    for j in 0..n {
        for i in (j + 1)..n {
            t[(i, j)] = Complex64::new(0.0, 0.0);
        }
    }
    Ok((q, t))
}

/// Swaps the adjacent diagonal entries `k` and `k+1` of the triangular
/// factor with a unitary rotation, updating `q` so that `Q T Qᴴ` is unchanged.
fn swap_adjacent(q: &mut CMatrix, t: &mut CMatrix, k: usize) {
    let n = t.nrows();
    let a = t[(k, k)];
    let b = t[(k + 1, k + 1)];
    let off = t[(k, k + 1)];
    // Eigenvector of the 2×2 block for eigenvalue b becomes the first basis vector.
    let x1 = off;
    let x2 = b - a;
    let r = (x1.norm_sqr() + x2.norm_sqr()).sqrt();
    if r == 0.0 {
        return;
    }
    let (g00, g10) = (x1 / r, x2 / r);
    let (g01, g11) = (-g10.conj(), g00.conj());

    for j in 0..n {
        let (u, v) = (t[(k, j)], t[(k + 1, j)]);
        t[(k, j)] = g00.conj() * u + g10.conj() * v;
        t[(k + 1, j)] = g01.conj() * u + g11.conj() * v;
    }
    for i in 0..n {
        let (u, v) = (t[(i, k)], t[(i, k + 1)]);
        t[(i, k)] = u * g00 + v * g10;
        t[(i, k + 1)] = u * g01 + v * g11;
        let (u, v) = (q[(i, k)], q[(i, k + 1)]);
        q[(i, k)] = u * g00 + v * g10;
        q[(i, k + 1)] = u * g01 + v * g11;
    }
    t[(k + 1, k)] = Complex64::new(0.0, 0.0);
}

/// Reorders a complex Schur form so that eigenvalues accepted by `select`
/// lead the diagonal. Returns the number of selected eigenvalues.
pub fn reorder_schur<F>(q: &mut CMatrix, t: &mut CMatrix, select: F) -> usize
where
    F: Fn(Complex64) -> bool,
{
    let n = t.nrows();
    let mut leading = 0;
    for j in 0..n {
        if select(t[(j, j)]) {
            let mut pos = j;
            while pos > leading {
                swap_adjacent(q, t, pos - 1);
                pos -= 1;
            }
            leading += 1;
        }
    }
    leading
}

/// Solves the Lyapunov equation `Aᵀ X + X A = −R` for symmetric `R`.
pub fn solve_lyapunov(a: &DMatrix<f64>, r: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let (u, t) = complex_schur(&to_complex(a))?;
    let rt = u.adjoint() * to_complex(r) * &u;
    let mut x = CMatrix::zeros(n, n);
    let scale = t.iter().map(|z| z.norm()).fold(1.0, f64::max);
    for j in 0..n {
        let mut rhs: Vec<Complex64> = (0..n).map(|p| -rt[(p, j)]).collect();
        for i in 0..j {
            let tij = t[(i, j)];
            for (p, v) in rhs.iter_mut().enumerate() {
                *v -= x[(p, i)] * tij;
            }
        }
        // (Tᴴ + t_jj I) is lower triangular.
        for p in 0..n {
            let mut acc = rhs[p];
            for qi in 0..p {
                acc -= t[(qi, p)].conj() * x[(qi, j)];
            }
            let diag = t[(p, p)].conj() + t[(j, j)];
            if diag.norm() <= 1e-14 * scale {
                return Err(Error::Singular(
                    "Lyapunov operator has eigenvalues symmetric about the imaginary axis".into(),
                ));
            }
            x[(p, j)] = acc / diag;
        }
    }
    let full = &u * x * u.adjoint();
    Ok(symmetrize(&full.map(|z| z.re)))
}

/// Smallest singular value of the complex Hautus matrix `[λI − A, B]`.
pub fn hautus_margin(a: &DMatrix<f64>, b: &DMatrix<f64>, lambda: Complex64) -> f64 {
    let n = a.nrows();
    let m = b.ncols();
    let mut h = CMatrix::zeros(n, n + m);
    for i in 0..n {
        for j in 0..n {
            let diag = if i == j { lambda } else { Complex64::new(0.0, 0.0) };
            h[(i, j)] = diag - Complex64::new(a[(i, j)], 0.0);
        }
        for j in 0..m {
            h[(i, n + j)] = Complex64::new(b[(i, j)], 0.0);
        }
    }
    h.singular_values().iter().copied().fold(f64::INFINITY, f64::min)
}

pub fn frobenius(m: &DMatrix<f64>) -> f64 {
    m.norm()
}
