//! Simulation and analysis toolkit for envariance experiments on photonic
//! spin and orbital angular momentum.

pub mod analysis;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod measurement;
pub mod operator;
pub mod optics;
pub mod schmidt;
pub mod space;
pub mod state;
pub mod tomography;

pub use error::{Error, Result};
pub use experiment::{ExperimentKind, SwapConfig};
pub use measurement::{CountTable, NoiseModel, ProbabilityTable, ProjectorMode, ProjectorSet};
pub use space::{BipartiteSplit, SpaceDescriptor};
pub use state::{DensityMatrix, Ket};
