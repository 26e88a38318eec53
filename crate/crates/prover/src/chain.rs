//! Proof steps, claims and chains, with a versioned JSON form.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{ProverError, Result};
use crate::rational::Q;
use crate::state::{ExactState, LabelSwap, NullMerge, Side};

pub const PROOF_SCHEMA_VERSION: u32 = 1;

/// `P(side:label | state)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ProbRef {
    pub side: Side,
    pub label: String,
    pub state: String,
}

impl ProbRef {
    pub fn system(label: impl Into<String>, state: impl Into<String>) -> ProbRef {
        ProbRef {
            side: Side::System,
            label: label.into(),
            state: state.into(),
        }
    }

    pub fn environment(label: impl Into<String>, state: impl Into<String>) -> ProbRef {
        ProbRef {
            side: Side::Environment,
            label: label.into(),
            state: state.into(),
        }
    }
}

impl fmt::Display for ProbRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.side {
            Side::System => write!(f, "P(|{}⟩ | {})", self.label, self.state),
            Side::Environment => write!(f, "P(|{}⟩_E | {})", self.label, self.state),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "relation", rename_all = "snake_case")]
pub enum Claim {
    Equal {
        left: ProbRef,
        right: ProbRef,
    },
    /// `Σ coefficient · P = rhs`.
    Linear {
        terms: Vec<(Q, ProbRef)>,
        rhs: Q,
    },
}

impl fmt::Display for Claim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Claim::Equal { left, right } => write!(f, "{left} = {right}"),
            Claim::Linear { terms, rhs } => {
                for (i, (c, p)) in terms.iter().enumerate() {
                    let (sign, mag) = if c.is_negative() {
                        ("−", -c.clone())
                    } else {
                        ("+", c.clone())
                    };
                    match (i, sign) {
                        (0, "+") => {}
                        (0, _) => write!(f, "−")?,
                        _ => write!(f, " {sign} ")?,
                    }
                    if mag != Q::one() {
                        write!(f, "{mag}·")?;
                    }
                    write!(f, "{p}")?;
                }
                write!(f, " = {rhs}")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Premise {
    #[serde(rename = "I")]
    One,
    #[serde(rename = "II")]
    Two,
    #[serde(rename = "III")]
    Three,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Construction {
    /// Re-expression of environment kets in a rotated basis.
    FineGrain,
    /// Unitary copy of environment labels into an ancilla.
    AncillaPremeasure,
    /// Rewriting zero-amplitude terms; the vector is unchanged.
    NullMerge,
    /// Probabilities of a complete set of outcomes sum to one.
    Normalization,
    /// A coarse outcome is the disjoint union of its refinements.
    Regroup,
    /// Totals over zero-weight terms agree between representations of one vector.
    Rearrangement,
}

impl Construction {
    pub fn name(self) -> &'static str {
        match self {
            Construction::FineGrain => "fine-graining",
            Construction::AncillaPremeasure => "ancilla pre-measurement",
            Construction::NullMerge => "null-term merge",
            Construction::Normalization => "normalization",
            Construction::Regroup => "regrouping",
            Construction::Rearrangement => "rearrangement",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", content = "id", rename_all = "snake_case")]
pub enum Justification {
    Premise(Premise),
    Construction(Construction),
}

impl fmt::Display for Justification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Justification::Premise(Premise::One) => write!(f, "Premise I"),
            Justification::Premise(Premise::Two) => write!(f, "Premise II"),
            Justification::Premise(Premise::Three) => write!(f, "Premise III"),
            Justification::Construction(c) => write!(f, "{}", c.name()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    SwapCounterswap,
    LocalInvisibility,
    CorrelationLink,
    FineGrain,
    AncillaPremeasure,
    MergeNullTerms,
    EquateCounts,
}

/// Rows of a real orthogonal matrix, each `√scale_sq · integer vector`.
/// Row 0 is the uniform vector; the new environment kets are the columns
/// `f_j = Σ_k H[k][j] |ε_k⟩` with `ε_0` the original label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisChange {
    pub system: String,
    pub original: String,
    /// Fresh orthonormal environment kets ε_1 … ε_{m−1}.
    pub complement: Vec<String>,
    /// Labels of the columns f_1 … f_m.
    pub refined: Vec<String>,
    pub rows: Vec<(Q, Vec<i64>)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AncillaRecord {
    pub system: String,
    pub environment: String,
    pub ancilla: String,
    /// Label of the composite system ket `|system⟩|environment⟩`.
    pub composite: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum CountRule {
    Normalization {
        state: String,
    },
    Regroup {
        coarse: String,
        fine: String,
        system_label: String,
        refined: Vec<String>,
    },
    Rearrangement {
        before: String,
        after: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Payload {
    /// The verifier computes both images and registers them under
    /// `system_swapped` and `twice_swapped`.
    SwapCounterswap {
        state: String,
        system_swap: LabelSwap,
        environment_swap: LabelSwap,
        system_swapped: String,
        twice_swapped: String,
        label: String,
    },
    LocalInvisibility {
        before: String,
        after: String,
        operator: LabelSwap,
        observed: Side,
        label: String,
    },
    CorrelationLink {
        state: String,
        system_label: String,
        environment_label: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tag: Option<String>,
    },
    FineGrain {
        before: String,
        after: String,
        changes: Vec<BasisChange>,
    },
    AncillaPremeasure {
        before: String,
        after: String,
        records: Vec<AncillaRecord>,
    },
    MergeNullTerms {
        before: String,
        after: String,
        merge: NullMerge,
    },
    EquateCounts {
        #[serde(flatten)]
        rule: CountRule,
    },
}

impl Payload {
    pub fn kind(&self) -> StepKind {
        match self {
            Payload::SwapCounterswap { .. } => StepKind::SwapCounterswap,
            Payload::LocalInvisibility { .. } => StepKind::LocalInvisibility,
            Payload::CorrelationLink { .. } => StepKind::CorrelationLink,
            Payload::FineGrain { .. } => StepKind::FineGrain,
            Payload::AncillaPremeasure { .. } => StepKind::AncillaPremeasure,
            Payload::MergeNullTerms { .. } => StepKind::MergeNullTerms,
            Payload::EquateCounts { .. } => StepKind::EquateCounts,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofStep {
    pub index: usize,
    pub justification: Justification,
    pub payload: Payload,
    pub claims: Vec<Claim>,
    /// Sub-proof this step belongs to, e.g. `null_elimination/0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
}

impl ProofStep {
    pub fn kind(&self) -> StepKind {
        self.payload.kind()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainMetadata {
    /// Principles taken as given rather than derived.
    pub axioms: Vec<String>,
    /// Assumptions with no executable counterpart in the chain.
    pub assumed_credo: Vec<String>,
}

impl Default for ChainMetadata {
    fn default() -> Self {
        ChainMetadata {
            axioms: vec![
                "premise_I: mathematically identical states have identical statistics".into(),
            ],
            assumed_credo: vec![
                "an immediately repeated measurement yields the same outcome".into(),
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProofChain {
    pub schema_version: u32,
    /// Id of the state whose system probabilities are concluded.
    pub target: String,
    /// States that are not images of a swap step.
    pub states: Vec<ExactState>,
    pub steps: Vec<ProofStep>,
    pub conclusion: BTreeMap<String, Q>,
    pub metadata: ChainMetadata,
}

impl ProofChain {
    pub fn state(&self, id: &str) -> Option<&ExactState> {
        self.states.iter().find(|s| s.id == id)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<ProofChain> {
        let chain: ProofChain = serde_json::from_str(text)?;
        if chain.schema_version != PROOF_SCHEMA_VERSION {
            return Err(ProverError::Parse(format!(
                "unsupported proof schema version {}",
                chain.schema_version
            )));
        }
        Ok(chain)
    }

    /// Steps tagged with a group whose name starts with `prefix`.
    pub fn group_steps<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = &'a ProofStep> + 'a {
        self.steps
            .iter()
            .filter(move |s| s.group.as_deref().is_some_and(|g| g.starts_with(prefix)))
    }
}
