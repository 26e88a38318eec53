//! Offline analysis of saved CountTable files.

use std::path::Path;

use envlab_core::analysis::premises::bhattacharyya_with_uncertainty;
use envlab_core::state::DensityMatrixJson;
use envlab_core::tomography::{linear_inversion, linear_inversion_clipped};
use envlab_core::CountTable;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::pipeline::mle_or_best;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TomoMethod {
    LinearInversion,
    /// Linear inversion with negative eigenvalues clipped to zero.
    LinearInversionClipped,
    MaxLikelihood,
}

impl std::str::FromStr for TomoMethod {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "li" | "linear_inversion" => Ok(TomoMethod::LinearInversion),
            "li-clip" | "linear_inversion_clipped" => Ok(TomoMethod::LinearInversionClipped),
            "mle" | "max_likelihood" => Ok(TomoMethod::MaxLikelihood),
            other => Err(CliError::Config(format!(
                "unknown tomography method `{other}`"
            ))),
        }
    }
}

pub fn tomo(csv: &Path, method: TomoMethod) -> Result<DensityMatrixJson> {
    let table = CountTable::load_csv(csv)?;
    let set = table.projector_set()?;
    let rho = match method {
        TomoMethod::LinearInversion => linear_inversion(&table, &set)?,
        TomoMethod::LinearInversionClipped => linear_inversion_clipped(&table, &set)?,
        TomoMethod::MaxLikelihood => mle_or_best(&table)?,
    };
    Ok(rho.to_json())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub b: f64,
    pub sigma: f64,
    pub one_minus_b: f64,
    pub resamples: usize,
    pub seed: u64,
}

pub fn compare(a: &Path, b: &Path, resamples: usize, seed: u64) -> Result<Comparison> {
    let ta = CountTable::load_csv(a)?;
    let tb = CountTable::load_csv(b)?;
    let e = bhattacharyya_with_uncertainty(&ta, &tb, resamples, seed)?;
    Ok(Comparison {
        b: e.value,
        sigma: e.sigma,
        one_minus_b: 1.0 - e.value,
        resamples,
        seed,
    })
}
