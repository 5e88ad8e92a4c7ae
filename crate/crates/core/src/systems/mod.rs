//! System representations and the example families.
//!
//! [`LtiSystem`] is a dense pair `(A, B)`. [`SpectralSystem`] is the diagonal
//! special case given by generator eigenvalues and the rows of `B*` on the
//! eigenbasis; it is what the PDE examples produce before truncation.

mod continued_fraction;
mod examples;
mod projection;
pub mod spec_file;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use continued_fraction::{continued_fraction_x0, continued_fraction_x0_with_guard, ContinuedFractionX0};
pub use examples::{fractional_heat, hermite_functions, hermite_heat, point_control_heat, point_control_heat_at, PointLocation};
pub use projection::{projection_matrix, spectral_projection_family, CutRule};

/// Finite truncation `y' = Ay + Bu`.
#[derive(Debug, Clone, PartialEq)]
pub struct LtiSystem {
    pub a_matrix: DMatrix<f64>,
    pub b_matrix: DMatrix<f64>,
    pub label: String,
    /// Basis label of the spectral system this was cut from, if any.
    pub parent: Option<String>,
}

impl LtiSystem {
    pub fn n_states(&self) -> usize {
        self.a_matrix.nrows()
    }

    pub fn n_inputs(&self) -> usize {
        self.b_matrix.ncols()
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// The same pair with generator `A + μI`.
    pub fn shifted(&self, mu: f64) -> LtiSystem {
        let n = self.n_states();
        LtiSystem {
            a_matrix: &self.a_matrix + DMatrix::identity(n, n) * mu,
            b_matrix: self.b_matrix.clone(),
            label: format!("{} shifted by {mu}", self.label),
            parent: self.parent.clone(),
        }
    }

    /// Scales the control matrix by `s`.
    pub fn scaled_input(&self, s: f64) -> LtiSystem {
        LtiSystem {
            a_matrix: self.a_matrix.clone(),
            b_matrix: &self.b_matrix * s,
            label: format!("{} with B scaled by {s}", self.label),
            parent: self.parent.clone(),
        }
    }
}

/// Validates and wraps a pair `(A, B)`.
pub fn build_system(a_matrix: DMatrix<f64>, b_matrix: DMatrix<f64>) -> Result<LtiSystem> {
    let (n, nc) = a_matrix.shape();
    if n == 0 || n != nc {
        return Err(Error::Dimension(format!("A must be square and non-empty, got {n}×{nc}")));
    }
    if b_matrix.nrows() != n || b_matrix.ncols() == 0 {
        return Err(Error::Dimension(format!(
            "B must be {n}×M with M ≥ 1, got {}×{}",
            b_matrix.nrows(),
            b_matrix.ncols()
        )));
    }
    if a_matrix.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("A"));
    }
    if b_matrix.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("B"));
    }
    let label = format!("matrix system N={n}, M={}", b_matrix.ncols());
    Ok(LtiSystem {
        a_matrix,
        b_matrix,
        label,
        parent: None,
    })
}

/// Diagonal system in an orthonormal eigenbasis.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSystem {
    /// Generator eigenvalues, descending (least stable first).
    pub eigenvalues: Vec<f64>,
    /// Row `n` is `B*` applied to the `n`-th eigenfunction.
    pub control_rows: DMatrix<f64>,
    pub basis_label: String,
    /// Control space is expressed in the same modal basis (distributed
    /// control), so truncation also cuts the control columns.
    pub modal_control: bool,
}

impl SpectralSystem {
    /// Sorts modes by descending eigenvalue; ties keep their original order.
    pub fn new(
        eigenvalues: Vec<f64>,
        control_rows: DMatrix<f64>,
        basis_label: impl Into<String>,
        modal_control: bool,
    ) -> Result<Self> {
        let n = eigenvalues.len();
        if n == 0 {
            return Err(Error::Dimension("spectral system needs at least one mode".into()));
        }
        if control_rows.nrows() != n || control_rows.ncols() == 0 {
            return Err(Error::Dimension(format!(
                "control_rows must be {n}×M, got {}×{}",
                control_rows.nrows(),
                control_rows.ncols()
            )));
        }
        if modal_control && control_rows.ncols() != n {
            return Err(Error::Dimension("modal control requires a square control matrix".into()));
        }
        if eigenvalues.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("eigenvalues"));
        }
        if control_rows.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("control_rows"));
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eigenvalues[j].partial_cmp(&eigenvalues[i]).unwrap());
        let eigenvalues = order.iter().map(|&i| eigenvalues[i]).collect();
        let m = control_rows.ncols();
        let control_rows = DMatrix::from_fn(n, m, |r, c| {
            let col = if modal_control { order[c] } else { c };
            control_rows[(order[r], col)]
        });
        Ok(Self {
            eigenvalues,
            control_rows,
            basis_label: basis_label.into(),
            modal_control,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Leading `n` modes as a spectral system.
    pub fn leading(&self, n: usize) -> Result<SpectralSystem> {
        if n == 0 || n > self.n_modes() {
            return Err(Error::InvalidArgument(format!(
                "truncation size {n} outside 1..={}",
                self.n_modes()
            )));
        }
        let cols = if self.modal_control { n } else { self.control_rows.ncols() };
        Ok(SpectralSystem {
            eigenvalues: self.eigenvalues[..n].to_vec(),
            control_rows: self.control_rows.view((0, 0), (n, cols)).into_owned(),
            basis_label: self.basis_label.clone(),
            modal_control: self.modal_control,
        })
    }

    /// Full system as a dense pair; `a_matrix = diag(λ)` exactly.
    pub fn to_lti(&self) -> LtiSystem {
        LtiSystem {
            a_matrix: DMatrix::from_diagonal(&DVector::from_vec(self.eigenvalues.clone())),
            b_matrix: self.control_rows.clone(),
            label: format!("{} (N={})", self.basis_label, self.n_modes()),
            parent: Some(self.basis_label.clone()),
        }
    }

    /// Decay rates `−λ_n` of the adjoint modes.
    pub fn decay_rates(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|l| -l).collect()
    }
}

/// Keeps the leading `n` modes of `spec`.
pub fn truncate(spec: &SpectralSystem, n: usize) -> Result<LtiSystem> {
    let lead = spec.leading(n)?;
    let mut sys = lead.to_lti();
    sys.label = format!("{} truncated to {n} of {} modes", spec.basis_label, spec.n_modes());
    Ok(sys)
}

/// Constants describing a control operator that is bounded only into an
/// extrapolation space of order `γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnboundedConstantsSpec {
    pub gamma: f64,
    pub rho0: f64,
    /// Analytic-semigroup constant `C(γ)`.
    pub c_gamma: f64,
    /// Norm of `((ρ₀I − A)^γ)⁻¹ B` as a bounded map.
    pub b_norm: f64,
}

impl UnboundedConstantsSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 0.5) {
            return Err(Error::InvalidArgument(format!("gamma = {} must lie in (0, 1/2)", self.gamma)));
        }
        if !(self.c_gamma > 0.0) {
            return Err(Error::InvalidArgument("C(gamma) must be positive".into()));
        }
        if !(self.b_norm >= 0.0) || !self.rho0.is_finite() {
            return Err(Error::InvalidArgument("b_norm must be non-negative and rho0 finite".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_system() {
        let s = build_system(DMatrix::zeros(1, 1), DMatrix::from_element(1, 1, 1.0)).unwrap();
        assert_eq!((s.n_states(), s.n_inputs()), (1, 1));
    }

    #[test]
    fn two_by_one_system_echoes_input() {
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -2.0]);
        let b = DMatrix::from_row_slice(2, 1, &[1.0, 0.0]);
        let s = build_system(a.clone(), b.clone()).unwrap();
        assert_eq!(s.a_matrix, a);
        assert_eq!(s.b_matrix, b);
        assert_eq!(s.label, "matrix system N=2, M=1");
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let err = build_system(DMatrix::zeros(3, 3), DMatrix::zeros(2, 1)).unwrap_err();
        assert!(matches!(err, Error::Dimension(_)));
    }

    #[test]
    fn non_finite_is_rejected() {
        let a = DMatrix::from_element(1, 1, f64::NAN);
        assert!(matches!(build_system(a, DMatrix::zeros(1, 1)), Err(Error::NonFinite("A"))));
    }

    #[test]
    fn spectral_sort_is_stable_and_permutes_rows() {
        let rows = DMatrix::from_row_slice(3, 1, &[1.0, 2.0, 3.0]);
        let s = SpectralSystem::new(vec![-3.0, -1.0, -1.0], rows, "t", false).unwrap();
        assert_eq!(s.eigenvalues, vec![-1.0, -1.0, -3.0]);
        assert_eq!(s.control_rows.as_slice(), &[2.0, 3.0, 1.0]);
    }

    #[test]
    fn to_lti_is_exactly_diagonal() {
        let rows = DMatrix::from_row_slice(2, 1, &[1.0, 0.5]);
        let s = SpectralSystem::new(vec![0.25, -7.5], rows, "t", false).unwrap();
        let l = s.to_lti();
        assert_eq!(l.a_matrix[(0, 0)], 0.25);
        assert_eq!(l.a_matrix[(1, 1)], -7.5);
        assert_eq!(l.a_matrix[(0, 1)], 0.0);
    }

    #[test]
    fn truncation_errors() {
        let s = point_control_heat(0.3, 0.0, 5).unwrap();
        assert!(truncate(&s, 0).is_err());
        assert!(truncate(&s, 6).is_err());
    }

    #[test]
    fn unbounded_spec_validation() {
        let ok = UnboundedConstantsSpec { gamma: 0.25, rho0: 0.0, c_gamma: 1.0, b_norm: 1.0 };
        assert!(ok.validate().is_ok());
        assert!(UnboundedConstantsSpec { gamma: 0.5, ..ok }.validate().is_err());
        assert!(UnboundedConstantsSpec { gamma: 0.0, ..ok }.validate().is_err());
    }
}
