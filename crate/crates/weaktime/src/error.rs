//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("operator is not Hermitian: {0}")]
    NotHermitian(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("dimension mismatch for {object}: expected {expected}, got {got}")]
    DimMismatch {
        object: String,
        expected: usize,
        got: usize,
    },

    #[error("invalid projector `{name}`: {reason}")]
    InvalidProjector { name: String, reason: String },

    #[error("observable projectors do not resolve the identity (residual {residual:.3e})")]
    IncompleteObservable { residual: f64 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("negative time t = {0}")]
    NegativeTime(f64),

    #[error("unknown observable index {index} (model has {count} projectors)")]
    UnknownIndex { index: usize, count: usize },

    #[error("unknown final label `{0}`")]
    UnknownFinal(String),

    #[error("postselection probability {prob:.3e} is below the floor {p_min:.3e}")]
    VanishingPostselection { prob: f64, p_min: f64 },

    #[error("final family is not complete: {0}")]
    IncompleteFinals(String),

    #[error("closed form is singular at Omega*t = {omega_t}")]
    SingularPostselection { omega_t: f64 },

    #[error("pointer grid too small: {0}")]
    GridTooSmall(String),

    #[error("invalid detector: {0}")]
    InvalidDetector(String),

    #[error("mixed initial states are not supported by the direct composite evolution; run one pure eigen-member at a time")]
    MixedStateUnsupported,

    #[error("coupling gamma must be positive, got {0}")]
    ZeroCoupling(f64),

    #[error("scenario parse error: {0}")]
    Parse(String),

    #[error("invalid scenario at `{path}`: {message}")]
    Validation { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn validation(path: &str, message: impl Into<String>) -> Self {
        Error::Validation {
            path: path.to_string(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
