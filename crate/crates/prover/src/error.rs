use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProverError {
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("amplitudes are not all equal; fine-grain the state first")]
    NotEqualAmplitude,
    #[error("state has no zero-weight terms")]
    NothingToEliminate,
    #[error("invalid pre-measurement: {0}")]
    InvalidPremeasurement(String),
    #[error("chain rejected at step {}: {reason}", step.map(|s| s.to_string()).unwrap_or_else(|| "-".into()))]
    Rejected { step: Option<usize>, reason: String },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Core(#[from] envlab_core::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, ProverError>;
