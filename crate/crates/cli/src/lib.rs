//! Batch front-end for the simulated experiments and the proof generator.

pub mod config;
pub mod error;
pub mod pipeline;
pub mod prove;
pub mod tools;

pub use config::{parse_noise, Execution, ReportFormat, RunConfig};
pub use error::{CliError, Result};
pub use pipeline::{run_experiment, RunOutcome};
pub use prove::{parse_weights, run_prover, ProveOutcome};
