//! Seeded count simulation.
//!
//! Every projector draws from its own ChaCha20 stream: the generator is
//! seeded with `seed_from_u64(seed)` and moved to stream `index`, so a count
//! depends only on `(seed, projector index)` and not on evaluation order.
//! Per-setting jitter angles use streams starting at [`SETTING_STREAM_BASE`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Poisson};

use super::{CountTable, NoiseModel, ProbabilityTable, Provenance};

pub const SETTING_STREAM_BASE: u64 = 1 << 32;

pub fn projector_rng(seed: u64, index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn setting_rng(seed: u64, setting: u64) -> ChaCha20Rng {
    projector_rng(seed, SETTING_STREAM_BASE + setting)
}

/// Counts for each entry of `probs` at `shots_per_setting` shots per
/// measurement setting. Without shot noise the count is the rounded mean.
pub fn sample_counts(
    probs: &ProbabilityTable,
    shots_per_setting: u64,
    noise: &NoiseModel,
    seed: u64,
) -> CountTable {
    sample_from_means(probs, shots_per_setting, noise, seed)
}

pub(crate) fn sample_from_means(
    probs: &ProbabilityTable,
    shots_per_setting: u64,
    noise: &NoiseModel,
    seed: u64,
) -> CountTable {
    let shots = shots_per_setting as f64;
    let entries = probs
        .entries
        .iter()
        .enumerate()
        .map(|(i, (id, p))| {
            let mean = noise.efficiency * shots * p.max(0.0) + noise.background_rate;
            let count = if !noise.shot_noise || mean <= 0.0 {
                mean.round() as u64
            } else {
                let poisson = Poisson::new(mean).expect("positive finite mean");
                poisson.sample(&mut projector_rng(seed, i as u64)) as u64
            };
            (id.clone(), count)
        })
        .collect();
    CountTable {
        mode: probs.mode,
        entries,
        total_shots: shots_per_setting * probs.mode.settings() as u64,
        seed,
        provenance: Provenance::default(),
        shot_noise: noise.shot_noise,
    }
}

/// Redraws every count as Poisson(observed count). Tables without shot
/// noise are returned unchanged.
pub fn poisson_resample<R: Rng>(table: &CountTable, rng: &mut R) -> CountTable {
    let mut out = table.clone();
    if table.shot_noise {
        for (_, n) in &mut out.entries {
            if *n > 0 {
                *n = Poisson::new(*n as f64).expect("positive mean").sample(rng) as u64;
            }
        }
    }
    out
}
