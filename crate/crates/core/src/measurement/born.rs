//! Generative outcome model. Only acquisition (and the likelihood inside
//! maximum-likelihood tomography) may call into this file; premise verdicts
//! never do.

use num_complex::Complex64;
use rand_distr::{Distribution, Normal};

use super::sampling::{sample_from_means, setting_rng};
use super::{CountTable, NoiseModel, ProbabilityTable, Projector, ProjectorSet};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::optics::{half_wave_plate, SAM_LABELS};
use crate::state::{DensityMatrix, Ket};

/// Generative probabilities ⟨π|ρ|π⟩ for each projector of `set`.
pub fn born_probabilities(rho: &DensityMatrix, set: &ProjectorSet) -> Result<ProbabilityTable> {
    if rho.space() != &set.space {
        return Err(Error::SpaceMismatch(format!(
            "state on {:?}, projectors on {:?}",
            rho.space().ids(),
            set.space.ids()
        )));
    }
    Ok(ProbabilityTable {
        mode: set.mode,
        entries: set
            .projectors
            .iter()
            .map(|p| {
                (
                    p.id.clone(),
                    expectation(rho.matrix(), &p.ket).clamp(0.0, 1.0),
                )
            })
            .collect(),
        normalization: 1.0,
    })
}

/// Re⟨π|m|π⟩ without clamping.
pub(crate) fn expectation(m: &CMatrix, ket: &Ket) -> f64 {
    let v = ket.amplitudes();
    let mut acc = 0.0;
    for (j, vj) in v.iter().enumerate() {
        if vj.re == 0.0 && vj.im == 0.0 {
            continue;
        }
        let column: Complex64 = v
            .iter()
            .enumerate()
            .map(|(i, vi)| vi.conj() * m[(i, j)])
            .sum();
        acc += (column * vj).re;
    }
    acc
}

/// `|π⟩⟨π|` for each projector, in set order.
pub(crate) fn projector_matrices(set: &ProjectorSet) -> Vec<CMatrix> {
    set.projectors
        .iter()
        .map(|p| {
            let v = p.ket.amplitudes();
            v * v.adjoint()
        })
        .collect()
}

/// Simulated acquisition of `set` on `rho`.
///
/// With nonzero `unitary_jitter`, each measurement setting draws one
/// wave-plate angle error δ and its SAM analyzer states are rotated by
/// `HWP(δ)·HWP(0)†`. Subsystems without SAM labels are unaffected.
pub fn simulate_counts(
    rho: &DensityMatrix,
    set: &ProjectorSet,
    shots_per_setting: u64,
    noise: &NoiseModel,
    seed: u64,
) -> Result<CountTable> {
    noise.validate()?;
    if noise.unitary_jitter == 0.0 {
        let probs = born_probabilities(rho, set)?;
        return Ok(super::sample_counts(&probs, shots_per_setting, noise, seed));
    }
    let normal = Normal::new(0.0, noise.unitary_jitter)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut settings: Vec<usize> = set.projectors.iter().map(|p| p.setting).collect();
    settings.sort_unstable();
    settings.dedup();
    let mut jitter = std::collections::BTreeMap::new();
    for s in settings {
        jitter.insert(s, normal.sample(&mut setting_rng(seed, s as u64)));
    }
    let sam_ids: Vec<String> = set
        .space
        .subsystems()
        .iter()
        .filter(|s| s.labels.iter().map(String::as_str).eq(SAM_LABELS))
        .map(|s| s.id.clone())
        .collect();
    let mut entries = Vec::with_capacity(set.len());
    for p in &set.projectors {
        let ket = jittered(p, &sam_ids, jitter[&p.setting])?;
        entries.push((
            p.id.clone(),
            expectation(rho.matrix(), &ket).clamp(0.0, 1.0),
        ));
    }
    let probs = ProbabilityTable {
        mode: set.mode,
        entries,
        normalization: 1.0,
    };
    Ok(sample_from_means(&probs, shots_per_setting, noise, seed))
}

fn jittered(p: &Projector, sam_ids: &[String], delta: f64) -> Result<Ket> {
    let mut ket = p.ket.clone();
    for id in sam_ids {
        let rotation = half_wave_plate(id, delta)?.compose(&half_wave_plate(id, 0.0)?.dagger())?;
        ket = rotation.apply(&ket)?;
    }
    Ok(ket)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::{prepare, ExperimentKind};
    use crate::linalg::c;
    use crate::measurement::{tomography_projectors, ProjectorMode};
    use crate::optics::{oam_pair_space, sam_space};
    use crate::state::density_of;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn bell() -> DensityMatrix {
        let space = sam_space("sam").product(&oam_pair_space("oam")).unwrap();
        let h = c(FRAC_1_SQRT_2, 0.0);
        let psi = Ket::from_terms(&space, &[(h, &["R", "+1"]), (h, &["L", "-1"])]).unwrap();
        density_of(&psi).unwrap()
    }

    #[test]
    fn bell_probabilities() {
        let rho = bell();
        let set = tomography_projectors(ProjectorMode::FullJoint36, rho.space()).unwrap();
        let p = born_probabilities(&rho, &set).unwrap();
        assert!((p.get("R⊗+1").unwrap() - 0.5).abs() < 1e-12);
        assert!(p.get("R⊗-1").unwrap().abs() < 1e-12);
        // D = (1, −i)/√2 on SAM, d = (1, i)/√2 on OAM.
        let d_d = [c(0.5, 0.0), c(0.0, 0.5), c(0.0, -0.5), c(0.5, 0.0)];
        let psi = [
            c(FRAC_1_SQRT_2, 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
            c(FRAC_1_SQRT_2, 0.0),
        ];
        let amp: num_complex::Complex64 = d_d.iter().zip(psi).map(|(a, b)| a.conj() * b).sum();
        assert!((p.get("D⊗d").unwrap() - amp.norm_sqr()).abs() < 1e-12);
        assert!((amp.norm_sqr() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn settings_sum_to_one() {
        for kind in ExperimentKind::ALL {
            let rho = density_of(&prepare(kind).unwrap()).unwrap();
            let set = tomography_projectors(ProjectorMode::FullJoint36, rho.space()).unwrap();
            let p = born_probabilities(&rho, &set).unwrap();
            for s in 0..9 {
                let total: f64 = set
                    .projectors
                    .iter()
                    .zip(p.values())
                    .filter(|(pr, _)| pr.setting == s)
                    .map(|(_, v)| v)
                    .sum();
                assert!((total - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn space_mismatch() {
        let rho = bell();
        let set = tomography_projectors(ProjectorMode::ReducedSingle6, &sam_space("sam")).unwrap();
        assert!(matches!(
            born_probabilities(&rho, &set),
            Err(Error::SpaceMismatch(_))
        ));
    }

    #[test]
    fn jitter_is_seeded_and_small() {
        let rho = bell();
        let set = tomography_projectors(ProjectorMode::FullJoint36, rho.space()).unwrap();
        let noise = NoiseModel {
            unitary_jitter: 0.01,
            ..NoiseModel::default()
        };
        let a = simulate_counts(&rho, &set, 10_000, &noise, 7).unwrap();
        let b = simulate_counts(&rho, &set, 10_000, &noise, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.get("R⊗+1").unwrap() > 4500);
    }
}
