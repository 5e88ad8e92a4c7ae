use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("quadrature did not reach tolerance {tol:e} (estimate {estimate:e})")]
    Quadrature { tol: f64, estimate: f64 },

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("shifted pair is not stabilizable: eigenvalue {re} + {im}i is not reachable by B")]
    Unstabilizable { re: f64, im: f64 },

    #[error("mode {index} is invisible to the sensor (φ_j(x0) = 0)")]
    InvisibleMode { index: usize },

    #[error("no admissible certificate: {0}")]
    NoCertificate(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("system spec: {0}")]
    Spec(String),
}
