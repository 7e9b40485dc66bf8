use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    Graph(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid map structure: {0}")]
    Structure(String),
    #[error("map evaluation failed in component {component}: {reason}")]
    Evaluation { component: usize, reason: String },
    #[error("inversion failed in component {component}: {reason}")]
    Inversion { component: usize, reason: String },
    #[error("non-finite density at probe {index}")]
    FlaggedProbe { index: usize },
    #[error("matrix error: {0}")]
    Matrix(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("sequencing error: {0}")]
    Sequencing(String),
    #[error("step {step} failed: {reason}")]
    StepFailed { step: usize, reason: String },
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures caused by the numerics rather than by the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Evaluation { .. }
                | Error::Inversion { .. }
                | Error::FlaggedProbe { .. }
                | Error::Matrix(_)
                | Error::StepFailed { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
