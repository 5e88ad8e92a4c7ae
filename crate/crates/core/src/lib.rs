//! Certificates of complete stabilizability for finite truncations of linear
//! control systems `y' = Ay + Bu`.
//!
//! The crate checks the family of weak observability inequalities
//!
//! ```text
//! ‖S(T)*φ‖ ≤ D‖B*S(T−·)*φ‖_{L²(0,T)} + C e^{−αT}‖φ‖
//! ```
//!
//! over grids of decay rates and horizons, evaluates the explicit constants
//! produced by spectral/dissipative (Lebeau–Robbiano type) arguments, and
//! synthesizes feedback gains with any prescribed decay rate from shifted
//! Riccati equations. Time-periodic systems with piecewise-constant control
//! windows are handled by [`periodic`].

pub mod error;
pub mod feedback;
pub mod linalg;
pub mod lrconstants;
pub mod periodic;
pub mod quadrature;
pub mod semigroup;
pub mod systems;
pub mod verify;
pub mod weakobs;

pub use error::{Error, Result};
pub use feedback::{ControlSignal, FeedbackResult};
pub use lrconstants::{ProjectionFamily, SemigroupBound};
pub use periodic::{PeriodicCertificate, PeriodicSystem};
pub use quadrature::QuadratureSpec;
pub use semigroup::GramianResult;
pub use systems::{ContinuedFractionX0, LtiSystem, SpectralSystem, UnboundedConstantsSpec};
pub use weakobs::{CertificateFamily, CertificateStatus, WeakObsCertificate};
