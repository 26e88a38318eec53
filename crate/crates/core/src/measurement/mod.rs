//! Tomographic projector sets, count records, and their frequencies.
//!
//! The generative evaluator lives in [`born`] and is the only place that
//! turns a state into outcome probabilities. Everything downstream of
//! acquisition works from [`CountTable`]s.

pub mod born;
mod csv_io;
pub mod sampling;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::{ExperimentKind, SwapConfig};
use crate::linalg::{c, ONE, ZERO};
use crate::optics::{OAM_PAIR_LABELS, SAM_LABELS};
use crate::space::{SpaceDescriptor, Subsystem};
use crate::state::Ket;

pub use born::{born_probabilities, simulate_counts};
pub use sampling::sample_counts;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    /// Index into the Pauli list I, X, Y, Z.
    pub fn pauli_index(self) -> usize {
        match self {
            Axis::X => 1,
            Axis::Y => 2,
            Axis::Z => 3,
        }
    }
}

/// Eigenvector of a Pauli-analog observable on a two-level subsystem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PauliState {
    pub axis: Axis,
    /// +1 or −1.
    pub sign: i8,
}

impl PauliState {
    /// Order used for every six-state set: z±, x±, y±.
    pub const SIX: [PauliState; 6] = [
        PauliState {
            axis: Axis::Z,
            sign: 1,
        },
        PauliState {
            axis: Axis::Z,
            sign: -1,
        },
        PauliState {
            axis: Axis::X,
            sign: 1,
        },
        PauliState {
            axis: Axis::X,
            sign: -1,
        },
        PauliState {
            axis: Axis::Y,
            sign: 1,
        },
        PauliState {
            axis: Axis::Y,
            sign: -1,
        },
    ];

    /// Amplitudes over (first label, second label).
    pub fn amplitudes(self) -> [num_complex::Complex64; 2] {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let s = self.sign as f64;
        match self.axis {
            Axis::Z if self.sign > 0 => [ONE, ZERO],
            Axis::Z => [ZERO, ONE],
            Axis::X => [c(h, 0.0), c(s * h, 0.0)],
            Axis::Y => [c(h, 0.0), c(0.0, s * h)],
        }
    }
}

/// Naming scheme for the six states of one subsystem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Flavor {
    Sam,
    Oam,
    Generic,
}

impl Flavor {
    fn of(sub: &Subsystem) -> Flavor {
        let labels: Vec<&str> = sub.labels.iter().map(String::as_str).collect();
        if labels == SAM_LABELS {
            Flavor::Sam
        } else if labels == OAM_PAIR_LABELS {
            Flavor::Oam
        } else {
            Flavor::Generic
        }
    }

    /// SAM: R/L are the circular poles, H/V the x-axis and A/D the y-axis
    /// pair given `|H⟩ = (|R⟩+|L⟩)/√2`. OAM uses lowercase names with the
    /// poles kept as `+1`/`-1`; its y-axis names are mirrored (`d` is y+)
    /// so that `D⊗d` and `A⊗a` are the correlated pairs of
    /// `(|R,+1⟩+|L,−1⟩)/√2`, like `H⊗h`.
    fn name(self, state: PauliState) -> &'static str {
        use Axis::*;
        match (self, state.axis, state.sign > 0) {
            (Flavor::Sam, Z, true) => "R",
            (Flavor::Sam, Z, false) => "L",
            (Flavor::Sam, X, true) => "H",
            (Flavor::Sam, X, false) => "V",
            (Flavor::Sam, Y, true) => "A",
            (Flavor::Sam, Y, false) => "D",
            (Flavor::Oam, Z, true) => "+1",
            (Flavor::Oam, Z, false) => "-1",
            (Flavor::Oam, X, true) => "h",
            (Flavor::Oam, X, false) => "v",
            (Flavor::Oam, Y, true) => "d",
            (Flavor::Oam, Y, false) => "a",
            (Flavor::Generic, Z, true) => "z+",
            (Flavor::Generic, Z, false) => "z-",
            (Flavor::Generic, X, true) => "x+",
            (Flavor::Generic, X, false) => "x-",
            (Flavor::Generic, Y, true) => "y+",
            (Flavor::Generic, Y, false) => "y-",
        }
    }
}

pub const ID_SEPARATOR: &str = "⊗";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectorMode {
    /// All 36 products of the six eigenstates on each of two qubit-like factors.
    FullJoint36,
    /// The six eigenstates of one qubit-like subsystem.
    ReducedSingle6,
    /// `{R, L} × {+1, −1}`.
    ConditionalCircular4,
    /// One projector per computational basis state of an arbitrary space.
    Basis,
}

impl ProjectorMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ProjectorMode::FullJoint36 => "full_joint_36",
            ProjectorMode::ReducedSingle6 => "reduced_single_6",
            ProjectorMode::ConditionalCircular4 => "conditional_circular_4",
            ProjectorMode::Basis => "basis",
        }
    }

    /// Number of complete measurement bases in a record of this mode.
    pub fn settings(self) -> usize {
        match self {
            ProjectorMode::FullJoint36 => 9,
            ProjectorMode::ReducedSingle6 => 3,
            ProjectorMode::ConditionalCircular4 | ProjectorMode::Basis => 1,
        }
    }
}

impl fmt::Display for ProjectorMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProjectorMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            ProjectorMode::FullJoint36,
            ProjectorMode::ReducedSingle6,
            ProjectorMode::ConditionalCircular4,
            ProjectorMode::Basis,
        ]
        .into_iter()
        .find(|m| m.as_str() == s)
        .ok_or_else(|| Error::Parse(format!("unknown projector mode `{s}`")))
    }
}

#[derive(Debug, Clone)]
pub struct Projector {
    pub id: String,
    pub ket: Ket,
    /// One Pauli eigenstate per factor (empty for `Basis` projectors).
    pub factors: Vec<PauliState>,
    /// Index of the measurement setting (complete basis) this projector belongs to.
    pub setting: usize,
}

#[derive(Debug, Clone)]
pub struct ProjectorSet {
    pub mode: ProjectorMode,
    pub space: SpaceDescriptor,
    pub projectors: Vec<Projector>,
}

impl ProjectorSet {
    pub fn len(&self) -> usize {
        self.projectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projectors.is_empty()
    }

    pub fn ids(&self) -> Vec<&str> {
        self.projectors.iter().map(|p| p.id.as_str()).collect()
    }

    pub fn settings(&self) -> usize {
        let mut seen: Vec<usize> = self.projectors.iter().map(|p| p.setting).collect();
        seen.sort_unstable();
        seen.dedup();
        seen.len()
    }

    pub fn get(&self, id: &str) -> Option<&Projector> {
        self.projectors.iter().find(|p| p.id == id)
    }
}

fn setting_index(axes: &[Axis]) -> usize {
    axes.iter().fold(0, |acc, a| {
        acc * 3
            + match a {
                Axis::X => 0,
                Axis::Y => 1,
                Axis::Z => 2,
            }
    })
}

fn qubit(sub: &Subsystem) -> Result<()> {
    if sub.dim() != 2 {
        return Err(Error::UnsupportedSpace(format!(
            "subsystem `{}` has dimension {}, expected 2",
            sub.id,
            sub.dim()
        )));
    }
    Ok(())
}

fn product_projector(space: &SpaceDescriptor, states: &[PauliState]) -> Result<Projector> {
    let subs = space.subsystems();
    let mut amps = vec![ONE];
    for st in states {
        let a = st.amplitudes();
        amps = amps.iter().flat_map(|x| [x * a[0], x * a[1]]).collect();
    }
    let id = subs
        .iter()
        .zip(states)
        .map(|(sub, st)| Flavor::of(sub).name(*st))
        .collect::<Vec<_>>()
        .join(ID_SEPARATOR);
    let axes: Vec<Axis> = states.iter().map(|s| s.axis).collect();
    Ok(Projector {
        id,
        ket: Ket::from_vec(space.clone(), amps)?,
        factors: states.to_vec(),
        setting: setting_index(&axes),
    })
}

/// Deterministic projector set for `mode` on `space`. FullJoint36 is ordered
/// with the first factor's state as the slow index, both following
/// [`PauliState::SIX`].
pub fn tomography_projectors(mode: ProjectorMode, space: &SpaceDescriptor) -> Result<ProjectorSet> {
    let subs = space.subsystems();
    let projectors = match mode {
        ProjectorMode::FullJoint36 | ProjectorMode::ConditionalCircular4 => {
            if subs.len() != 2 {
                return Err(Error::UnsupportedSpace(format!(
                    "{mode} needs two subsystems, got {}",
                    subs.len()
                )));
            }
            qubit(&subs[0])?;
            qubit(&subs[1])?;
            let states: &[PauliState] = match mode {
                ProjectorMode::FullJoint36 => &PauliState::SIX,
                _ => &PauliState::SIX[..2],
            };
            let mut out = Vec::new();
            for a in states {
                for b in states {
                    let mut p = product_projector(space, &[*a, *b])?;
                    if mode == ProjectorMode::ConditionalCircular4 {
                        p.setting = 0;
                    }
                    out.push(p);
                }
            }
            out
        }
        ProjectorMode::ReducedSingle6 => {
            if subs.len() != 1 {
                return Err(Error::UnsupportedSpace(format!(
                    "{mode} needs one subsystem, got {}",
                    subs.len()
                )));
            }
            qubit(&subs[0])?;
            PauliState::SIX
                .iter()
                .map(|s| product_projector(space, &[*s]))
                .collect::<Result<Vec<_>>>()?
        }
        ProjectorMode::Basis => (0..space.dim())
            .map(|i| {
                let labels = space.labels_of(i);
                Ok(Projector {
                    id: labels.join(ID_SEPARATOR),
                    ket: Ket::basis(space, &labels)?,
                    factors: Vec::new(),
                    setting: 0,
                })
            })
            .collect::<Result<Vec<_>>>()?,
    };
    Ok(ProjectorSet {
        mode,
        space: space.clone(),
        projectors,
    })
}

/// Per-projector real weights keyed by projector id, in projector order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityTable {
    pub mode: ProjectorMode,
    pub entries: Vec<(String, f64)>,
    /// Divisor that produced the entries: 1 for per-setting generative
    /// probabilities, the grand count total for frequencies.
    pub normalization: f64,
}

impl ProbabilityTable {
    pub fn get(&self, id: &str) -> Option<f64> {
        self.entries.iter().find(|(k, _)| k == id).map(|(_, v)| *v)
    }

    pub fn ids(&self) -> Vec<&str> {
        self.entries.iter().map(|(k, _)| k.as_str()).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().map(|(_, v)| *v).collect()
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|(_, v)| v).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub shot_noise: bool,
    /// Detection efficiency in (0, 1].
    pub efficiency: f64,
    /// Expected stray counts per projector configuration.
    pub background_rate: f64,
    /// Standard deviation, in radians, of the wave-plate angle error drawn
    /// once per measurement setting.
    pub unitary_jitter: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel {
            shot_noise: true,
            efficiency: 1.0,
            background_rate: 0.0,
            unitary_jitter: 0.0,
        }
    }
}

impl NoiseModel {
    pub fn none() -> Self {
        NoiseModel {
            shot_noise: false,
            ..NoiseModel::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "efficiency {} outside (0, 1]",
                self.efficiency
            )));
        }
        if !(self.background_rate >= 0.0) || !(self.unitary_jitter >= 0.0) {
            return Err(Error::InvalidParameter(
                "background rate and jitter must be nonnegative".into(),
            ));
        }
        Ok(())
    }

    /// True when counts are exact expectations (no sampling noise at all).
    pub fn is_noiseless(&self) -> bool {
        !self.shot_noise && self.unitary_jitter == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub experiment: Option<ExperimentKind>,
    pub swap_config: Option<SwapConfig>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountTable {
    pub mode: ProjectorMode,
    pub entries: Vec<(String, u64)>,
    /// Shots delivered over the whole acquisition (per setting × settings).
    pub total_shots: u64,
    pub seed: u64,
    pub provenance: Provenance,
    /// Whether the counts carry Poisson sampling noise; drives the
    /// parametric bootstrap.
    pub shot_noise: bool,
}

impl CountTable {
    pub fn get(&self, id: &str) -> Option<u64> {
        self.entries.iter().find(|(k, _)| k == id).map(|(_, v)| *v)
    }

    pub fn ids(&self) -> Vec<&str> {
        self.entries.iter().map(|(k, _)| k.as_str()).collect()
    }

    pub fn grand_total(&self) -> u64 {
        self.entries.iter().map(|(_, v)| v).sum()
    }

    pub fn with_provenance(mut self, experiment: ExperimentKind, config: SwapConfig) -> Self {
        self.provenance = Provenance {
            experiment: Some(experiment),
            swap_config: Some(config),
        };
        self
    }

    /// Stable key used in report lineage, e.g. `local/original/full_joint_36`.
    pub fn key(&self) -> String {
        format!(
            "{}/{}/{}",
            self.provenance
                .experiment
                .map(|e| e.as_str())
                .unwrap_or("-"),
            self.provenance
                .swap_config
                .map(|c| c.as_str())
                .unwrap_or("-"),
            self.mode
        )
    }

    /// Rebuilds the projector set the table was recorded with. The space
    /// comes from the recorded experiment when present, otherwise it is
    /// inferred from the projector ids.
    pub fn projector_set(&self) -> Result<ProjectorSet> {
        let space = match (self.mode, self.provenance.experiment) {
            (ProjectorMode::ReducedSingle6, Some(kind)) => {
                kind.space().select(&[kind.system_id()])?
            }
            (ProjectorMode::FullJoint36 | ProjectorMode::ConditionalCircular4, Some(kind)) => {
                kind.space()
            }
            (ProjectorMode::Basis, _) => {
                return Err(Error::UnsupportedSpace(
                    "basis-mode records do not carry their space".into(),
                ))
            }
            (mode, None) => infer_space(mode, &self.ids())?,
        };
        let set = tomography_projectors(self.mode, &space)?;
        let mut mine = self.ids();
        let mut theirs = set.ids();
        mine.sort_unstable();
        theirs.sort_unstable();
        if mine != theirs {
            return Err(Error::IncomparableRecords(format!(
                "record ids do not match the {} projector set on {:?}",
                self.mode,
                space.ids()
            )));
        }
        Ok(set)
    }
}

fn infer_space(mode: ProjectorMode, ids: &[&str]) -> Result<SpaceDescriptor> {
    let first = ids.first().ok_or(Error::EmptyCounts)?;
    let parts: Vec<&str> = first.split(ID_SEPARATOR).collect();
    let flavor_of = |name: &str| -> SpaceDescriptor {
        if ["R", "L", "H", "V", "A", "D"].contains(&name) {
            crate::optics::sam_space("sam")
        } else if ["+1", "-1", "h", "v", "d", "a"].contains(&name) {
            crate::optics::oam_pair_space("oam")
        } else {
            SpaceDescriptor::single("q", &["0", "1"]).expect("static")
        }
    };
    match (mode, parts.as_slice()) {
        (ProjectorMode::ReducedSingle6, [a]) => Ok(flavor_of(a)),
        (ProjectorMode::FullJoint36 | ProjectorMode::ConditionalCircular4, [a, b]) => {
            let sa = flavor_of(a);
            let mut sb = flavor_of(b);
            if sa == sb {
                let sub = &sb.subsystems()[0];
                sb = SpaceDescriptor::new([(format!("{}2", sub.id), sub.labels.clone())])?;
            }
            sa.product(&sb)
        }
        _ => Err(Error::UnsupportedSpace(format!(
            "cannot infer a space for {mode} from id `{first}`"
        ))),
    }
}

/// Count / grand total over every configuration of the record.
pub fn frequencies(counts: &CountTable) -> Result<ProbabilityTable> {
    let total = counts.grand_total();
    if total == 0 {
        return Err(Error::EmptyCounts);
    }
    let n = total as f64;
    Ok(ProbabilityTable {
        mode: counts.mode,
        entries: counts
            .entries
            .iter()
            .map(|(k, v)| (k.clone(), *v as f64 / n))
            .collect(),
        normalization: n,
    })
}
