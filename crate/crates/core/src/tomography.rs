//! Density-matrix reconstruction from tomographic records.
//!
//! Both estimators work on any [`TomographyRecord`], so a noiseless
//! [`ProbabilityTable`] can be inverted exactly as well as a [`CountTable`].

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::measurement::born::{expectation, projector_matrices};
use crate::measurement::{CountTable, ProbabilityTable, ProjectorMode, ProjectorSet};
use crate::state::{DensityMatrix, DensityMatrixJson};

/// Per-projector nonnegative weights (counts or probabilities).
pub trait TomographyRecord {
    fn mode(&self) -> ProjectorMode;
    fn weight(&self, id: &str) -> Option<f64>;
}

impl TomographyRecord for CountTable {
    fn mode(&self) -> ProjectorMode {
        self.mode
    }

    fn weight(&self, id: &str) -> Option<f64> {
        self.get(id).map(|v| v as f64)
    }
}

impl TomographyRecord for ProbabilityTable {
    fn mode(&self) -> ProjectorMode {
        self.mode
    }

    fn weight(&self, id: &str) -> Option<f64> {
        self.get(id)
    }
}

fn weights<R: TomographyRecord>(record: &R, set: &ProjectorSet) -> Result<Vec<f64>> {
    if record.mode() != set.mode {
        return Err(Error::IncomparableRecords(format!(
            "record mode {} against a {} projector set",
            record.mode(),
            set.mode
        )));
    }
    set.projectors
        .iter()
        .map(|p| {
            record
                .weight(&p.id)
                .ok_or_else(|| Error::MissingConfiguration(p.id.clone()))
        })
        .collect()
}

/// Stokes-like parameters `S_ij = ⟨σ_i⊗σ_j⟩` flattened as `4i + j` for
/// FullJoint36 (16 entries), or `S_i` for ReducedSingle6 (4 entries).
///
/// Each correlator comes from the counts of its own setting. A single-factor
/// parameter such as `S_z0` is measured in three settings (one per axis of
/// the other factor) and their estimates are averaged.
pub fn stokes_parameters<R: TomographyRecord>(record: &R, set: &ProjectorSet) -> Result<Vec<f64>> {
    let w = weights(record, set)?;
    match set.mode {
        ProjectorMode::FullJoint36 => {
            // Per setting (a-axis, b-axis): total, Σ s_a s_b n, Σ s_a n, Σ s_b n.
            let mut acc = [[[0.0f64; 4]; 3]; 3];
            for (p, n) in set.projectors.iter().zip(&w) {
                let (a, b) = (p.factors[0], p.factors[1]);
                let cell = &mut acc[a.axis.pauli_index() - 1][b.axis.pauli_index() - 1];
                let (sa, sb) = (a.sign as f64, b.sign as f64);
                cell[0] += n;
                cell[1] += sa * sb * n;
                cell[2] += sa * n;
                cell[3] += sb * n;
            }
            let mut s = vec![0.0; 16];
            s[0] = 1.0;
            for i in 0..3 {
                for j in 0..3 {
                    let cell = acc[i][j];
                    if cell[0] <= 0.0 {
                        return Err(Error::MissingConfiguration(format!(
                            "setting ({}, {}) has no counts",
                            i + 1,
                            j + 1
                        )));
                    }
                    s[4 * (i + 1) + (j + 1)] = cell[1] / cell[0];
                    s[4 * (i + 1)] += cell[2] / cell[0] / 3.0;
                    s[j + 1] += cell[3] / cell[0] / 3.0;
                }
            }
            Ok(s)
        }
        ProjectorMode::ReducedSingle6 => {
            let mut acc = [[0.0f64; 2]; 3];
            for (p, n) in set.projectors.iter().zip(&w) {
                let a = p.factors[0];
                let cell = &mut acc[a.axis.pauli_index() - 1];
                cell[0] += n;
                cell[1] += a.sign as f64 * n;
            }
            let mut s = vec![1.0, 0.0, 0.0, 0.0];
            for (k, cell) in acc.iter().enumerate() {
                if cell[0] <= 0.0 {
                    return Err(Error::MissingConfiguration(format!(
                        "axis {} has no counts",
                        k + 1
                    )));
                }
                s[k + 1] = cell[1] / cell[0];
            }
            Ok(s)
        }
        mode => Err(Error::MissingConfiguration(format!(
            "{mode} records are not tomographically complete"
        ))),
    }
}

/// `ρ = (1/d) Σ S_ij σ_i⊗σ_j`. Hermitian with unit trace; under noise it may
/// have small negative eigenvalues.
pub fn linear_inversion<R: TomographyRecord>(
    record: &R,
    set: &ProjectorSet,
) -> Result<DensityMatrix> {
    let s = stokes_parameters(record, set)?;
    let d = set.space.dim();
    let mut m = CMatrix::zeros(d, d);
    if s.len() == 16 {
        for i in 0..4 {
            for j in 0..4 {
                m += linalg::kron(&linalg::pauli(i), &linalg::pauli(j)).scale(s[4 * i + j]);
            }
        }
    } else {
        for (k, v) in s.iter().enumerate() {
            m += linalg::pauli(k).scale(*v);
        }
    }
    DensityMatrix::from_estimate(set.space.clone(), linalg::hermitize(&m.unscale(d as f64)))
}

/// Linear inversion with negative eigenvalues clipped and the trace restored.
pub fn linear_inversion_clipped<R: TomographyRecord>(
    record: &R,
    set: &ProjectorSet,
) -> Result<DensityMatrix> {
    Ok(linear_inversion(record, set)?.clipped())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    LinearInversion,
    MaxLikelihood,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    MaximallyMixed,
    LinearInversionSeed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionOptions {
    pub method: Method,
    pub max_iterations: usize,
    pub convergence_tol: f64,
    pub initial_state: InitialState,
}

impl Default for ReconstructionOptions {
    fn default() -> Self {
        ReconstructionOptions {
            method: Method::MaxLikelihood,
            max_iterations: 10_000,
            convergence_tol: 1e-10,
            initial_state: InitialState::LinearInversionSeed,
        }
    }
}

impl ReconstructionOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations < 1 {
            return Err(Error::InvalidParameter(
                "max_iterations must be at least 1".into(),
            ));
        }
        if !(self.convergence_tol > 0.0) {
            return Err(Error::InvalidParameter(
                "convergence_tol must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct MleOutcome {
    pub state: DensityMatrix,
    pub iterations: usize,
    pub log_likelihood: f64,
    /// Log-likelihood of every accepted iterate, starting with the seed.
    pub log_likelihood_trace: Vec<f64>,
}

/// Σ n_i log p_i(ρ) with `p_i = ⟨π_i|ρ|π_i⟩ / settings`, the probability of
/// outcome i over the whole acquisition. Zero-count terms are skipped.
pub fn log_likelihood<R: TomographyRecord>(
    record: &R,
    set: &ProjectorSet,
    rho: &DensityMatrix,
) -> Result<f64> {
    let w = weights(record, set)?;
    let k = set.settings() as f64;
    Ok(likelihood_terms(&w, set, rho.matrix(), k))
}

fn likelihood_terms(w: &[f64], set: &ProjectorSet, rho: &CMatrix, k: f64) -> f64 {
    let mut total = 0.0;
    for (p, n) in set.projectors.iter().zip(w) {
        if *n > 0.0 {
            let prob = expectation(rho, &p.ket) / k;
            if prob <= 0.0 {
                return f64::NEG_INFINITY;
            }
            total += n * prob.ln();
        }
    }
    total
}

/// Maximum-likelihood estimate by diluted `RρR` iteration.
///
/// Each step is `ρ' ∝ (I + εR) ρ (I + εR)` with `R = Σ (f_i / p_i) Π_i`
/// normalized so that `R = I` at the optimum. A step that lowers the
/// likelihood is rejected and ε is halved; iteration stops when an
/// accepted step gains less than `convergence_tol`, or when ε has shrunk
/// below 1e−12 (no ascent direction left).
pub fn mle_reconstruct<R: TomographyRecord>(
    record: &R,
    set: &ProjectorSet,
    opts: &ReconstructionOptions,
) -> Result<MleOutcome> {
    opts.validate()?;
    let w = weights(record, set)?;
    let total: f64 = w.iter().sum();
    if total <= 0.0 {
        return Err(Error::EmptyCounts);
    }
    let k = set.settings() as f64;
    let d = set.space.dim();
    let identity = CMatrix::identity(d, d);
    let projectors = projector_matrices(set);

    let mixed = DensityMatrix::maximally_mixed(&set.space).matrix().clone();
    let mut rho = match opts.initial_state {
        InitialState::MaximallyMixed => mixed.clone(),
        InitialState::LinearInversionSeed => {
            linear_inversion_clipped(record, set)?.matrix().clone()
        }
    };
    let mut ll = likelihood_terms(&w, set, &rho, k);
    if ll == f64::NEG_INFINITY {
        rho = rho.scale(0.999) + mixed.scale(0.001);
        ll = likelihood_terms(&w, set, &rho, k);
    }
    let mut trace = vec![ll];
    let mut epsilon = 1.0;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        iterations += 1;
        let mut r = CMatrix::zeros(d, d);
        for ((p, proj), n) in set.projectors.iter().zip(&projectors).zip(&w) {
            if *n > 0.0 {
                let prob = expectation(&rho, &p.ket) / k;
                let c = n / total / prob / k;
                r.zip_apply(proj, |a, b| *a += b * c);
            }
        }
        let step = &identity + r.scale(epsilon);
        let next = &step * &rho * &step;
        let next = linalg::hermitize(&next.unscale(linalg::trace(&next).re));
        let next_ll = likelihood_terms(&w, set, &next, k);
        if next_ll >= ll {
            let gain = next_ll - ll;
            rho = next;
            ll = next_ll;
            trace.push(ll);
            if gain < opts.convergence_tol {
                converged = true;
                break;
            }
        } else {
            epsilon *= 0.5;
            if epsilon < 1e-12 {
                converged = true;
                break;
            }
        }
    }
    let state = DensityMatrix::new(set.space.clone(), rho)?;
    if !converged {
        return Err(Error::ConvergenceFailure {
            iterations,
            best: Box::new(state),
        });
    }
    Ok(MleOutcome {
        state,
        iterations,
        log_likelihood: ll,
        log_likelihood_trace: trace,
    })
}

/// Runs the estimator selected by `opts.method`.
pub fn reconstruct<R: TomographyRecord>(
    record: &R,
    set: &ProjectorSet,
    opts: &ReconstructionOptions,
) -> Result<DensityMatrix> {
    match opts.method {
        Method::LinearInversion => linear_inversion(record, set),
        Method::MaxLikelihood => Ok(mle_reconstruct(record, set, opts)?.state),
    }
}

/// Single-subsystem state from a ReducedSingle6 record by linear inversion.
pub fn reduced_tomography(counts6: &CountTable) -> Result<DensityMatrix> {
    reduced_tomography_with(
        counts6,
        &ReconstructionOptions {
            method: Method::LinearInversion,
            ..ReconstructionOptions::default()
        },
    )
}

pub fn reduced_tomography_with(
    counts6: &CountTable,
    opts: &ReconstructionOptions,
) -> Result<DensityMatrix> {
    if counts6.mode != ProjectorMode::ReducedSingle6 {
        return Err(Error::MissingConfiguration(format!(
            "expected a {} record, got {}",
            ProjectorMode::ReducedSingle6,
            counts6.mode
        )));
    }
    let set = counts6.projector_set()?;
    reconstruct(counts6, &set, opts)
}

pub fn save_density_json(rho: &DensityMatrix, path: impl AsRef<Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(&rho.to_json())?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

pub fn load_density_json(path: impl AsRef<Path>) -> Result<DensityMatrix> {
    let doc: DensityMatrixJson = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    DensityMatrix::from_json(&doc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::{prepare, ExperimentKind};
    use crate::measurement::{
        born_probabilities, sample_counts, simulate_counts, tomography_projectors, NoiseModel,
    };
    use crate::optics::sam_space;
    use crate::state::density_of;

    fn bell_rho() -> DensityMatrix {
        density_of(&prepare(ExperimentKind::Local).unwrap()).unwrap()
    }

    /// F = |⟨ψ|ρ|ψ⟩| for a pure reference; enough for these checks.
    fn pure_fidelity(rho: &DensityMatrix, pure: &DensityMatrix) -> f64 {
        (rho.matrix() * pure.matrix()).trace().re
    }

    #[test]
    fn bell_stokes() {
        let rho = bell_rho();
        let set = tomography_projectors(ProjectorMode::FullJoint36, rho.space()).unwrap();
        let counts = sample_counts(
            &born_probabilities(&rho, &set).unwrap(),
            10_000,
            &NoiseModel::none(),
            0,
        );
        let s = stokes_parameters(&counts, &set).unwrap();
        // Direct oracle: Tr[ρ σ_i⊗σ_j].
        for i in 0..4 {
            for j in 0..4 {
                let op = linalg::kron(&linalg::pauli(i), &linalg::pauli(j));
                let want = (rho.matrix() * op).trace().re;
                assert!((s[4 * i + j] - want).abs() < 1e-12, "S_{i}{j}");
            }
        }
        assert_eq!(s[0], 1.0);
        assert!((s[15] - 1.0).abs() < 1e-12);
        assert!((s[5] - 1.0).abs() < 1e-12);
        assert!((s[10] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn linear_inversion_recovers_bell() {
        let rho = bell_rho();
        let set = tomography_projectors(ProjectorMode::FullJoint36, rho.space()).unwrap();
        let counts = sample_counts(
            &born_probabilities(&rho, &set).unwrap(),
            10_000,
            &NoiseModel::none(),
            0,
        );
        let est = linear_inversion(&counts, &set).unwrap();
        assert!(linalg::max_abs_diff(est.matrix(), rho.matrix()) < 1e-10);
        assert!((est.trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn missing_projector() {
        let rho = bell_rho();
        let set = tomography_projectors(ProjectorMode::FullJoint36, rho.space()).unwrap();
        let mut counts = sample_counts(
            &born_probabilities(&rho, &set).unwrap(),
            100,
            &NoiseModel::none(),
            0,
        );
        counts.entries.pop();
        assert!(matches!(
            linear_inversion(&counts, &set),
            Err(Error::MissingConfiguration(_))
        ));
    }

    #[test]
    fn mle_on_noiseless_bell() {
        let rho = bell_rho();
        let set = tomography_projectors(ProjectorMode::FullJoint36, rho.space()).unwrap();
        let counts = sample_counts(
            &born_probabilities(&rho, &set).unwrap(),
            10_000,
            &NoiseModel::none(),
            0,
        );
        let out = mle_reconstruct(&counts, &set, &ReconstructionOptions::default()).unwrap();
        assert!(pure_fidelity(&out.state, &rho) >= 1.0 - 1e-8);
    }

    #[test]
    fn mle_is_physical_and_monotone() {
        let rho = bell_rho();
        let set = tomography_projectors(ProjectorMode::FullJoint36, rho.space()).unwrap();
        for seed in 0..5 {
            let counts = simulate_counts(&rho, &set, 200, &NoiseModel::default(), seed).unwrap();
            let out = mle_reconstruct(&counts, &set, &ReconstructionOptions::default()).unwrap();
            assert!(out.state.min_eigenvalue() >= -1e-10);
            assert!((out.state.trace().re - 1.0).abs() <= 1e-10);
            for pair in out.log_likelihood_trace.windows(2) {
                assert!(pair[1] >= pair[0]);
            }
            let clipped = linear_inversion_clipped(&counts, &set).unwrap();
            let ll_clip = log_likelihood(&counts, &set, &clipped).unwrap();
            assert!(out.log_likelihood >= ll_clip);
        }
    }

    #[test]
    fn mle_from_mixed_start() {
        let rho = bell_rho();
        let set = tomography_projectors(ProjectorMode::FullJoint36, rho.space()).unwrap();
        let counts = simulate_counts(&rho, &set, 10_000, &NoiseModel::default(), 3).unwrap();
        let opts = ReconstructionOptions {
            initial_state: InitialState::MaximallyMixed,
            ..ReconstructionOptions::default()
        };
        let out = mle_reconstruct(&counts, &set, &opts).unwrap();
        assert!(pure_fidelity(&out.state, &rho) > 0.99);
    }

    #[test]
    fn convergence_failure_carries_best() {
        let rho = bell_rho();
        let set = tomography_projectors(ProjectorMode::FullJoint36, rho.space()).unwrap();
        let counts = simulate_counts(&rho, &set, 1000, &NoiseModel::default(), 1).unwrap();
        let opts = ReconstructionOptions {
            max_iterations: 1,
            convergence_tol: 1e-300,
            initial_state: InitialState::MaximallyMixed,
            ..ReconstructionOptions::default()
        };
        match mle_reconstruct(&counts, &set, &opts) {
            Err(Error::ConvergenceFailure { iterations, best }) => {
                assert_eq!(iterations, 1);
                assert!(best.min_eigenvalue() >= -1e-10);
            }
            other => panic!("expected ConvergenceFailure, got {other:?}"),
        }
    }

    #[test]
    fn reduced_from_marginal() {
        let rho = bell_rho().partial_trace(&["sam"]).unwrap();
        let set = tomography_projectors(ProjectorMode::ReducedSingle6, &sam_space("sam")).unwrap();
        let counts = sample_counts(
            &born_probabilities(&rho, &set).unwrap(),
            10_000,
            &NoiseModel::none(),
            0,
        )
        .with_provenance(ExperimentKind::Local, crate::SwapConfig::ORIGINAL);
        let est = reduced_tomography(&counts).unwrap();
        let half = DensityMatrix::maximally_mixed(&sam_space("sam"));
        assert!(linalg::max_abs_diff(est.matrix(), half.matrix()) < 1e-10);
        assert!((est.purity() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn json_round_trip() {
        let dir = std::env::temp_dir().join(format!("envlab-tomo-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("rho.json");
        let rho = bell_rho();
        save_density_json(&rho, &path).unwrap();
        let back = load_density_json(&path).unwrap();
        assert!(linalg::max_abs_diff(back.matrix(), rho.matrix()) < 1e-15);
        std::fs::remove_dir_all(dir).unwrap();
    }
}
