use serde::Serialize;
use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

/// Some premise verdict failed.
pub const EXIT_PREMISE_FAILURE: i32 = 1;
/// The proof verifier rejected a chain.
pub const EXIT_REJECTED: i32 = 2;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_DATA: i32 = 65;
pub const EXIT_IO: i32 = 74;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("proof rejected: {0}")]
    Rejected(String),
    #[error(transparent)]
    Core(#[from] envlab_core::Error),
    #[error(transparent)]
    Prover(envlab_prover::ProverError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl From<envlab_prover::ProverError> for CliError {
    fn from(e: envlab_prover::ProverError) -> Self {
        match e {
            envlab_prover::ProverError::Rejected { .. } => CliError::Rejected(e.to_string()),
            other => CliError::Prover(other),
        }
    }
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    message: String,
    exit_code: i32,
}

#[derive(Serialize)]
struct ErrorDoc<'a> {
    error: ErrorBody<'a>,
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        use envlab_core::Error as E;
        match self {
            CliError::Config(_) => "config",
            CliError::Rejected(_) => "rejected",
            CliError::Core(E::Io(_)) | CliError::Io(_) => "io",
            CliError::Core(E::Parse(_) | E::Csv(_) | E::Json(_)) | CliError::Json(_) => "parse",
            CliError::Core(_) => "computation",
            CliError::Prover(envlab_prover::ProverError::Parse(_)) => "parse",
            CliError::Prover(_) => "prover_input",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            "config" => EXIT_USAGE,
            "rejected" => EXIT_REJECTED,
            "io" => EXIT_IO,
            _ => EXIT_DATA,
        }
    }

    /// Single-line JSON document for standard error.
    pub fn to_json(&self) -> String {
        let doc = ErrorDoc {
            error: ErrorBody {
                kind: self.kind(),
                message: self.to_string(),
                exit_code: self.exit_code(),
            },
        };
        serde_json::to_string(&doc).expect("plain strings serialize")
    }
}
