use thiserror::Error;

use crate::state::DensityMatrix;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid space: {0}")]
    InvalidSpace(String),
    #[error("subsystem `{0}` appears more than once")]
    DuplicateSubsystem(String),
    #[error("unknown subsystem `{0}`")]
    UnknownSubsystem(String),
    #[error("unknown basis label `{label}` in subsystem `{subsystem}`")]
    UnknownBasisLabel { subsystem: String, label: String },
    #[error("space mismatch: {0}")]
    SpaceMismatch(String),
    #[error("ket is not normalized (norm² = {0})")]
    NotNormalized(f64),
    #[error("invalid bipartite split: {0}")]
    InvalidSplit(String),
    #[error("matrix is not unitary (max deviation {0:e})")]
    NotUnitary(f64),
    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),
    #[error("OAM population would leave the window at basis state {0}")]
    OamOverflow(String),
    #[error("unsupported subspace: {0}")]
    UnsupportedSubspace(String),
    #[error("post-selection on `{subsystem}`={label} has vanishing norm")]
    EmptyPostSelection { subsystem: String, label: String },
    #[error("unsupported space for projector set: {0}")]
    UnsupportedSpace(String),
    #[error("count record has zero total")]
    EmptyCounts,
    #[error("missing configuration: {0}")]
    MissingConfiguration(String),
    #[error("records are not comparable: {0}")]
    IncomparableRecords(String),
    #[error("maximum-likelihood estimation did not converge in {iterations} iterations")]
    ConvergenceFailure {
        iterations: usize,
        best: Box<DensityMatrix>,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
