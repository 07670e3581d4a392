use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the simulator and its numerical kernels.
///
/// Solver infeasibility is not an error: it is reported through
/// [`crate::solver::SolveStatus`] and [`crate::optimizer::SlotStatus`].
#[derive(Debug, Error)]
pub enum IsacError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("slot {slot} out of range (scenario has {num_slots} slots)")]
    SlotOutOfRange { slot: usize, num_slots: usize },

    #[error("distance must be positive, got {0} m")]
    NonPositiveDistance(f64),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("tracking diverged: predicted range {0} m")]
    TrackingDivergence(f64),

    #[error("singular innovation covariance in EKF update")]
    DegenerateUpdate,

    #[error("matrix has no principal direction (zero trace)")]
    ZeroMatrix,

    #[error("malformed conic problem: {0}")]
    MalformedProblem(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("config parse error: {0}")]
    ConfigParse(#[from] toml::de::Error),
}

pub type Result<T> = std::result::Result<T, IsacError>;
