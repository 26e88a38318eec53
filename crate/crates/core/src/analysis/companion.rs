//! Reconstruction-based companion metrics: fidelities and purities of
//! tomographic estimates. These never feed a premise verdict.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::premises::std_dev;
use crate::error::{Error, Result};
use crate::linalg;
use crate::measurement::sampling::poisson_resample;
use crate::measurement::CountTable;
use crate::state::DensityMatrix;
use crate::tomography::{mle_reconstruct, ReconstructionOptions};

pub const FIDELITY_CONVENTION: &str = "uhlmann_squared";
pub const ESTIMATOR: &str = "max_likelihood";

/// `(Tr √(√a b √a))²`.
pub fn fidelity(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.space() != b.space() {
        return Err(Error::SpaceMismatch(format!(
            "{:?} vs {:?}",
            a.space().ids(),
            b.space().ids()
        )));
    }
    let sa = linalg::psd_sqrt(a.matrix());
    let inner = &sa * b.matrix() * &sa;
    let root = linalg::psd_sqrt(&linalg::hermitize(&inner));
    Ok(linalg::trace(&root).re.powi(2))
}

pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.purity()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledEstimate {
    pub label: String,
    pub value: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompanionMetrics {
    pub estimator: String,
    pub fidelity_convention: String,
    pub resamples: usize,
    /// Fidelity of each swapped full-joint estimate to the original one.
    pub fidelities: Vec<LabeledEstimate>,
    /// Purity of each reduced estimate.
    pub purities: Vec<LabeledEstimate>,
}

fn mle(counts: &CountTable) -> Result<DensityMatrix> {
    let set = counts.projector_set()?;
    match mle_reconstruct(counts, &set, &ReconstructionOptions::default()) {
        Ok(out) => Ok(out.state),
        Err(Error::ConvergenceFailure { best, .. }) => Ok(*best),
        Err(e) => Err(e),
    }
}

fn bootstrap<F>(tables: &[&CountTable], resamples: usize, seed: u64, metric: F) -> Result<Vec<f64>>
where
    F: Fn(&[CountTable]) -> Result<f64> + Sync,
{
    if tables.iter().all(|t| !t.shot_noise) {
        return Ok(Vec::new());
    }
    (0..resamples)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let redrawn: Vec<CountTable> = tables
                .iter()
                .map(|t| poisson_resample(t, &mut rng))
                .collect();
            metric(&redrawn)
        })
        .collect()
}

/// Companion metrics with parametric-bootstrap sigmas.
///
/// `swapped_full` pairs a label with a FullJoint36 record to compare against
/// `original_full`; `reduced` pairs labels with ReducedSingle6 records.
pub fn companion_metrics(
    original_full: &CountTable,
    swapped_full: &[(String, &CountTable)],
    reduced: &[(String, &CountTable)],
    resamples: usize,
    seed: u64,
) -> Result<CompanionMetrics> {
    let original = mle(original_full)?;
    let mut fidelities = Vec::new();
    for (k, (label, table)) in swapped_full.iter().enumerate() {
        let value = fidelity(&original, &mle(table)?)?;
        let reps = bootstrap(
            &[original_full, table],
            resamples,
            seed.wrapping_add(k as u64),
            |t| fidelity(&mle(&t[0])?, &mle(&t[1])?),
        )?;
        fidelities.push(LabeledEstimate {
            label: label.clone(),
            value,
            sigma: std_dev(&reps),
        });
    }
    let mut purities = Vec::new();
    for (k, (label, table)) in reduced.iter().enumerate() {
        let value = mle(table)?.purity();
        let reps = bootstrap(
            &[table],
            resamples,
            seed.wrapping_add(1000 + k as u64),
            |t| Ok(mle(&t[0])?.purity()),
        )?;
        purities.push(LabeledEstimate {
            label: label.clone(),
            value,
            sigma: std_dev(&reps),
        });
    }
    Ok(CompanionMetrics {
        estimator: ESTIMATOR.into(),
        fidelity_convention: FIDELITY_CONVENTION.into(),
        resamples,
        fidelities,
        purities,
    })
}
