//! Exact-arithmetic proof objects for envariance-based probability
//! assignments.
//!
//! States are tracked by rational squared amplitudes on orthonormal labels.
//! Builders emit [`ProofChain`]s whose steps can be re-executed by
//! [`verify`], independently of how they were produced.

pub mod chain;
pub mod derive;
pub mod error;
pub mod numeric;
pub mod rational;
pub mod render;
pub mod state;
pub mod verify;

pub use chain::{Claim, Justification, Payload, Premise, ProbRef, ProofChain, ProofStep, StepKind};
pub use derive::{
    check_eel_subsumption, derive_born_probabilities, eliminate_null_terms, equiprobability_chain,
    fine_grain, EelSubsumption, FineGraining,
};
pub use error::{ProverError, Result};
pub use numeric::is_envariant;
pub use rational::Q;
pub use render::pretty;
pub use state::{ExactState, RationalSchmidtState, Side, Term};
pub use verify::{check_steps, verify, Solution};
