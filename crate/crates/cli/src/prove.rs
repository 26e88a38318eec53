//! Proof generation front-end.

use std::fs;
use std::path::{Path, PathBuf};

use envlab_prover::{
    derive_born_probabilities, pretty, verify, ProofChain, RationalSchmidtState, Q,
};

use crate::error::Result;

pub const CHAIN_FILE: &str = "proof.json";
pub const TEXT_FILE: &str = "proof.txt";

/// Parses `n/d` or `n` squared amplitudes.
pub fn parse_weights<S: AsRef<str>>(args: &[S]) -> Result<Vec<Q>> {
    Ok(args
        .iter()
        .map(|a| a.as_ref().parse::<Q>())
        .collect::<envlab_prover::Result<_>>()?)
}

#[derive(Debug, Clone)]
pub struct ProveOutcome {
    pub chain: ProofChain,
    pub files: Vec<PathBuf>,
}

/// Derives the chain for `weights`, re-verifies it from its JSON form and
/// writes the JSON and text renderings. Files are only written for chains
/// the verifier accepts.
pub fn run_prover(weights: &[Q], output_dir: &Path) -> Result<ProveOutcome> {
    let state = RationalSchmidtState::from_weights(weights)?;
    let chain = derive_born_probabilities(&state)?;
    let json = chain.to_json()?;
    verify(&ProofChain::from_json(&json)?)?;

    fs::create_dir_all(output_dir)?;
    let json_path = output_dir.join(CHAIN_FILE);
    let text_path = output_dir.join(TEXT_FILE);
    fs::write(&json_path, json)?;
    fs::write(&text_path, pretty(&chain))?;
    Ok(ProveOutcome {
        chain,
        files: vec![json_path, text_path],
    })
}
