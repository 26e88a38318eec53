//! Premise statistics computed from count records alone.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurement::sampling::poisson_resample;
use crate::measurement::{frequencies, CountTable, ProbabilityTable, ProjectorMode, ID_SEPARATOR};

pub const DEFAULT_RESAMPLES: usize = 1000;
pub const MIN_RESAMPLES: usize = 100;

/// Σ √(p1·p2) over the shared projector ids.
pub fn bhattacharyya(p1: &ProbabilityTable, p2: &ProbabilityTable) -> Result<f64> {
    same_keys(&p1.ids(), &p2.ids())?;
    let mut total = 0.0;
    for (id, a) in &p1.entries {
        let b = p2.get(id).expect("keys checked");
        total += (a * b).sqrt();
    }
    Ok(total)
}

fn same_keys(a: &[&str], b: &[&str]) -> Result<()> {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_unstable();
    y.sort_unstable();
    if x != y {
        return Err(Error::IncomparableRecords(format!(
            "projector ids differ ({} vs {} entries)",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub sigma: f64,
}

/// Bhattacharyya coefficient of the two records' frequencies, with a
/// parametric-bootstrap standard deviation.
///
/// Each replicate redraws every count as Poisson(observed count) and divides
/// by the observed grand total of its table, so that fluctuations in the
/// overall rate are part of the spread. Records without shot noise are
/// exact and get sigma 0. Replicate `r` uses ChaCha20 stream `r` of `seed`.
pub fn bhattacharyya_with_uncertainty(
    c1: &CountTable,
    c2: &CountTable,
    resamples: usize,
    seed: u64,
) -> Result<Estimate> {
    if resamples < MIN_RESAMPLES {
        return Err(Error::InvalidParameter(format!(
            "at least {MIN_RESAMPLES} resamples required, got {resamples}"
        )));
    }
    same_keys(&c1.ids(), &c2.ids())?;
    let value = bhattacharyya(&frequencies(c1)?, &frequencies(c2)?)?;
    if !c1.shot_noise && !c2.shot_noise {
        return Ok(Estimate { value, sigma: 0.0 });
    }
    let n1 = c1.grand_total() as f64;
    let n2 = c2.grand_total() as f64;
    let replicates: Vec<f64> = (0..resamples)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let a = poisson_resample(c1, &mut rng);
            let b = poisson_resample(c2, &mut rng);
            a.entries
                .iter()
                .map(|(id, x)| {
                    (*x as f64 / n1 * b.get(id).expect("keys checked") as f64 / n2).sqrt()
                })
                .sum()
        })
        .collect();
    Ok(Estimate {
        value,
        sigma: std_dev(&replicates),
    })
}

/// Sample standard deviation (n − 1 denominator).
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
    var.sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalCell {
    pub sam: String,
    pub oam: String,
    pub count: u64,
    /// P(sam | oam).
    pub value: f64,
    /// Binomial standard error √(v(1−v)/n) over the conditioning total.
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalTable {
    pub cells: Vec<ConditionalCell>,
}

impl ConditionalTable {
    pub fn get(&self, sam: &str, oam: &str) -> Option<&ConditionalCell> {
        self.cells.iter().find(|c| c.sam == sam && c.oam == oam)
    }
}

const SAM_POLES: [&str; 2] = ["R", "L"];
const OAM_POLES: [&str; 2] = ["+1", "-1"];

/// P(sam | oam) from a ConditionalCircular4 record, conditioning on the OAM
/// outcome.
pub fn conditional_frequencies(counts: &CountTable) -> Result<ConditionalTable> {
    if counts.mode != ProjectorMode::ConditionalCircular4 {
        return Err(Error::MissingConfiguration(format!(
            "expected a {} record, got {}",
            ProjectorMode::ConditionalCircular4,
            counts.mode
        )));
    }
    let count = |sam: &str, oam: &str| -> Result<u64> {
        let id = format!("{sam}{ID_SEPARATOR}{oam}");
        counts.get(&id).ok_or(Error::MissingConfiguration(id))
    };
    let mut cells = Vec::with_capacity(4);
    for oam in OAM_POLES {
        let row = [count(SAM_POLES[0], oam)?, count(SAM_POLES[1], oam)?];
        let total = row[0] + row[1];
        if total == 0 {
            return Err(Error::EmptyCounts);
        }
        for (sam, n) in SAM_POLES.iter().zip(row) {
            let value = n as f64 / total as f64;
            cells.push(ConditionalCell {
                sam: sam.to_string(),
                oam: oam.to_string(),
                count: n,
                value,
                sigma: (value * (1.0 - value) / total as f64).sqrt(),
            });
        }
    }
    Ok(ConditionalTable { cells })
}

/// Pass iff `value + sigma_multiplier · sigma ≥ min_value`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub min_value: f64,
    pub sigma_multiplier: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            min_value: 0.99,
            sigma_multiplier: 3.0,
        }
    }
}

impl Thresholds {
    pub fn passes(&self, value: f64, sigma: f64) -> bool {
        value + self.sigma_multiplier * sigma >= self.min_value
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdicts {
    pub premise1: bool,
    pub premise2: bool,
    pub premise3: bool,
}

impl Verdicts {
    pub fn all_pass(&self) -> bool {
        self.premise1 && self.premise2 && self.premise3
    }
}

/// Premise I from B(original, twice swapped), Premise II from the three
/// reduced-record B values, Premise III from P(R|+1) and P(L|−1).
pub fn verdicts(
    premise1: &Estimate,
    premise2: &[Estimate],
    premise3: &ConditionalTable,
    thresholds: &Thresholds,
) -> Result<Verdicts> {
    let correlated = [("R", "+1"), ("L", "-1")];
    let mut p3 = true;
    for (sam, oam) in correlated {
        let cell = premise3
            .get(sam, oam)
            .ok_or_else(|| Error::MissingConfiguration(format!("P({sam}|{oam})")))?;
        p3 &= thresholds.passes(cell.value, cell.sigma);
    }
    Ok(Verdicts {
        premise1: thresholds.passes(premise1.value, premise1.sigma),
        premise2: !premise2.is_empty()
            && premise2.iter().all(|e| thresholds.passes(e.value, e.sigma)),
        premise3: p3,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::Provenance;

    fn probs(values: &[f64]) -> ProbabilityTable {
        ProbabilityTable {
            mode: ProjectorMode::Basis,
            entries: values
                .iter()
                .enumerate()
                .map(|(i, v)| (format!("k{i}"), *v))
                .collect(),
            normalization: 1.0,
        }
    }

    fn counts(mode: ProjectorMode, entries: &[(&str, u64)], shot_noise: bool) -> CountTable {
        CountTable {
            mode,
            entries: entries.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            total_shots: entries.iter().map(|e| e.1).sum(),
            seed: 0,
            provenance: Provenance::default(),
            shot_noise,
        }
    }

    #[test]
    fn bhattacharyya_examples() {
        let p = probs(&[0.2, 0.3, 0.5]);
        assert!((bhattacharyya(&p, &p).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(
            bhattacharyya(&probs(&[1.0, 0.0]), &probs(&[0.0, 1.0])).unwrap(),
            0.0
        );
        let b = bhattacharyya(&probs(&[0.5, 0.5]), &probs(&[0.9, 0.1])).unwrap();
        assert!((b - (0.45f64.sqrt() + 0.05f64.sqrt())).abs() < 1e-15);
        assert!((b - 0.894_427_190_999_915_9).abs() < 1e-12);
    }

    #[test]
    fn bhattacharyya_key_mismatch() {
        assert!(matches!(
            bhattacharyya(&probs(&[1.0]), &probs(&[0.5, 0.5])),
            Err(Error::IncomparableRecords(_))
        ));
    }

    #[test]
    fn identical_noiseless_tables() {
        let t = counts(ProjectorMode::Basis, &[("a", 10), ("b", 30)], false);
        let e = bhattacharyya_with_uncertainty(&t, &t, 100, 1).unwrap();
        assert!((e.value - 1.0).abs() < 1e-15);
        assert_eq!(e.sigma, 0.0);
    }

    #[test]
    fn bootstrap_is_seeded() {
        let a = counts(ProjectorMode::Basis, &[("a", 1000), ("b", 3000)], true);
        let b = counts(ProjectorMode::Basis, &[("a", 1100), ("b", 2900)], true);
        let x = bhattacharyya_with_uncertainty(&a, &b, 200, 5).unwrap();
        let y = bhattacharyya_with_uncertainty(&a, &b, 200, 5).unwrap();
        assert_eq!(x, y);
        assert!(x.sigma > 0.0);
        assert!(bhattacharyya_with_uncertainty(&a, &b, 99, 5).is_err());
    }

    #[test]
    fn conditional_examples() {
        let perfect = counts(
            ProjectorMode::ConditionalCircular4,
            &[("R⊗+1", 5000), ("R⊗-1", 0), ("L⊗+1", 0), ("L⊗-1", 5000)],
            false,
        );
        let t = conditional_frequencies(&perfect).unwrap();
        assert_eq!(t.get("R", "+1").unwrap().value, 1.0);
        assert_eq!(t.get("R", "-1").unwrap().value, 0.0);
        assert_eq!(t.get("L", "-1").unwrap().value, 1.0);

        let flat = counts(
            ProjectorMode::ConditionalCircular4,
            &[("R⊗+1", 50), ("R⊗-1", 50), ("L⊗+1", 50), ("L⊗-1", 50)],
            true,
        );
        let t = conditional_frequencies(&flat).unwrap();
        for c in &t.cells {
            assert_eq!(c.value, 0.5);
        }
        for oam in OAM_POLES {
            let s: f64 = t
                .cells
                .iter()
                .filter(|c| c.oam == oam)
                .map(|c| c.value)
                .sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn conditional_errors() {
        let empty = counts(
            ProjectorMode::ConditionalCircular4,
            &[("R⊗+1", 0), ("R⊗-1", 5), ("L⊗+1", 0), ("L⊗-1", 5)],
            false,
        );
        assert!(matches!(
            conditional_frequencies(&empty),
            Err(Error::EmptyCounts)
        ));
        let wrong = counts(ProjectorMode::Basis, &[("a", 1)], false);
        assert!(conditional_frequencies(&wrong).is_err());
    }

    #[test]
    fn thresholds() {
        let t = Thresholds::default();
        assert!(t.passes(0.985, 0.002));
        assert!(!t.passes(0.98, 0.002));
    }
}
