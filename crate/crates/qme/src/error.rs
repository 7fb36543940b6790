//! Error type shared by every module in the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong when building specs, states, or running cycles.
#[derive(Debug, Error)]
pub enum Error {
    /// Matrix or tensor-factor dimensions do not line up.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A matrix that must be Hermitian is not, beyond tolerance.
    #[error("matrix is not Hermitian: defect {defect:.3e} exceeds tolerance {tol:.1e}")]
    NotHermitian { defect: f64, tol: f64 },

    /// A spec constructor was handed parameters that violate its contract.
    #[error("invalid specification: {0}")]
    Spec(String),

    /// A density operator failed positivity, trace, or rank validation.
    #[error("invalid state: {0}")]
    State(String),

    /// A scalar argument lies outside the domain of the requested map.
    #[error("domain error: {0}")]
    Domain(String),

    /// A parameter combination the library deliberately does not model.
    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    /// An integrator step size that would violate its stability guard.
    #[error("step size too large: {0}")]
    StepSize(String),

    /// An error tagged with the engine-cycle stage it occurred in.
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Wrap an error with the cycle stage it occurred in.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
