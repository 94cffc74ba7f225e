use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum HawkesError {
    #[error("invalid event sequence: {0}")]
    InvalidSequence(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("time {t} outside horizon [0, {horizon}]")]
    OutsideHorizon { t: f64, horizon: f64 },
    #[error("zero intensity at observed event (sequence {sequence}, event {event})")]
    ZeroIntensity { sequence: usize, event: usize },
    #[error("ground truth is nonstationary (spectral radius {radius:.6} >= 1)")]
    NonStationary { radius: f64 },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("ill-posed update: {0}")]
    IllPosed(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, HawkesError>;
