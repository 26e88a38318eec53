//! Construction of proof chains. Every step is produced by running the
//! same re-execution the verifier uses, so a builder bug surfaces as a
//! construction error rather than as an unverifiable chain.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::chain::{
    AncillaRecord, BasisChange, ChainMetadata, CountRule, Payload, ProbRef, ProofChain, ProofStep,
    PROOF_SCHEMA_VERSION,
};
use crate::error::{ProverError, Result};
use crate::rational::Q;
use crate::state::{ExactState, LabelSwap, NullMerge, RationalSchmidtState, Side, Term};
use crate::verify::{apply_fine_grain, apply_premeasurement, check_steps, Context, Solution};

pub const EEL_TAG: &str = "eel_subsumption";

struct Builder {
    ctx: Context,
    states: Vec<ExactState>,
    steps: Vec<ProofStep>,
    group: Option<String>,
}

impl Builder {
    fn new(root: &ExactState) -> Result<Builder> {
        let mut b = Builder {
            ctx: Context::default(),
            states: Vec::new(),
            steps: Vec::new(),
            group: None,
        };
        b.add_state(root.clone())?;
        Ok(b)
    }

    fn add_state(&mut self, state: ExactState) -> Result<String> {
        let id = state.id.clone();
        if self.ctx.state(&id).is_err() {
            self.states.push(state.clone());
        }
        self.ctx.add_state(state)?;
        Ok(id)
    }

    fn state(&self, id: &str) -> ExactState {
        self.ctx.state(id).expect("registered").clone()
    }

    fn push(&mut self, payload: Payload) -> Result<()> {
        let (justification, claims) = self.ctx.execute(&payload)?;
        self.steps.push(ProofStep {
            index: self.steps.len(),
            justification,
            payload,
            claims,
            group: self.group.clone(),
        });
        Ok(())
    }

    /// Steps 1–5 for the pair `(first, other)` of terms of `state`.
    fn pair_chain(&mut self, state: &str, first: &Term, other: &Term) -> Result<()> {
        let us_op = LabelSwap::new(Side::System, &first.system, &other.system);
        let ue_op = LabelSwap::new(Side::Environment, &first.environment, &other.environment);
        let us_id = format!("{}{state}", us_op.notation());
        let ue_us_id = format!("{}{us_id}", ue_op.notation());

        self.push(Payload::SwapCounterswap {
            state: state.into(),
            system_swap: us_op.clone(),
            environment_swap: ue_op.clone(),
            system_swapped: us_id.clone(),
            twice_swapped: ue_us_id.clone(),
            label: first.system.clone(),
        })?;
        self.push(Payload::LocalInvisibility {
            before: ue_us_id,
            after: us_id.clone(),
            operator: ue_op,
            observed: Side::System,
            label: first.system.clone(),
        })?;
        self.push(Payload::CorrelationLink {
            state: us_id.clone(),
            system_label: first.system.clone(),
            environment_label: other.environment.clone(),
            tag: None,
        })?;
        self.push(Payload::LocalInvisibility {
            before: us_id,
            after: state.into(),
            operator: us_op,
            observed: Side::Environment,
            label: other.environment.clone(),
        })?;
        self.push(Payload::CorrelationLink {
            state: state.into(),
            system_label: other.system.clone(),
            environment_label: other.environment.clone(),
            tag: None,
        })
    }

    /// Chains every listed system label of `state` to the first one.
    fn equiprobable(&mut self, state: &str, labels: &[String]) -> Result<()> {
        let psi = self.state(state);
        let term = |l: &str| {
            psi.term_of(Side::System, l)
                .cloned()
                .ok_or_else(|| ProverError::InvalidState(format!("`{l}` not in `{state}`")))
        };
        let Some(first) = labels.first() else {
            return Ok(());
        };
        let first = term(first)?;
        for l in &labels[1..] {
            let other = term(l)?;
            if other.weight != first.weight {
                return Err(ProverError::NotEqualAmplitude);
            }
            self.pair_chain(state, &first, &other)?;
        }
        Ok(())
    }

    fn normalize(&mut self, state: &str) -> Result<()> {
        self.push(Payload::EquateCounts {
            rule: CountRule::Normalization {
                state: state.into(),
            },
        })
    }

    fn finish(self, target: &str, conclusion: BTreeMap<String, Q>) -> ProofChain {
        ProofChain {
            schema_version: PROOF_SCHEMA_VERSION,
            target: target.into(),
            states: self.states,
            steps: self.steps,
            conclusion,
            metadata: ChainMetadata::default(),
        }
    }
}

fn system_labels(state: &ExactState) -> Vec<String> {
    state
        .labels(Side::System)
        .into_iter()
        .map(String::from)
        .collect()
}

/// Steps 1–5 for every pair `(s_0, s_j)` of an equal-amplitude state,
/// closed by normalization: each of the n terms gets probability 1/n.
pub fn equiprobability_chain(psi: &RationalSchmidtState) -> Result<ProofChain> {
    if !psi.is_equal_amplitude() {
        return Err(ProverError::NotEqualAmplitude);
    }
    let root = psi.as_exact();
    let mut b = Builder::new(root)?;
    b.equiprobable(&root.id, &system_labels(root))?;
    b.normalize(&root.id)?;
    let n = psi.terms().len() as i64;
    let conclusion = psi
        .terms()
        .iter()
        .map(|t| (t.system.clone(), Q::new(1, n)))
        .collect();
    Ok(b.finish(&root.id, conclusion))
}

/// Rows of the Helmert matrix of order m, as `(scale², integer row)`.
pub fn helmert_rows(m: usize) -> Vec<(Q, Vec<i64>)> {
    let mut rows = vec![(Q::new(1, m as i64), vec![1; m])];
    for k in 1..m {
        let mut v = vec![0; m];
        v[..k].fill(1);
        v[k] = -(k as i64);
        rows.push((Q::new(1, (k * (k + 1)) as i64), v));
    }
    rows
}

/// Result of [`fine_grain`]: the N-term equal-amplitude state and the
/// steps that produce it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FineGraining {
    pub state: RationalSchmidtState,
    /// Intermediate state after the environment basis change.
    pub rotated: String,
    pub states: Vec<ExactState>,
    pub steps: Vec<ProofStep>,
    /// Composite labels refining each original system label.
    pub refinement: BTreeMap<String, Vec<String>>,
}

impl FineGraining {
    pub fn verify(&self) -> Result<Solution> {
        check_steps(&self.states, &self.steps)
    }
}

fn fresh(base: String, taken: &BTreeSet<String>) -> String {
    let mut name = base;
    while taken.contains(&name) {
        name.push('\'');
    }
    name
}

fn fine_grain_into(
    b: &mut Builder,
    root: &ExactState,
) -> Result<(String, String, BTreeMap<String, Vec<String>>)> {
    let nonnull: Vec<&Term> = root.terms.iter().filter(|t| !t.weight.is_zero()).collect();
    let n = nonnull.iter().fold(num_bigint::BigInt::from(1), |acc, t| {
        num_integer::Integer::lcm(&acc, t.weight.denom())
    });
    let mut taken: BTreeSet<String> = root
        .terms
        .iter()
        .flat_map(|t| [t.system.clone(), t.environment.clone()])
        .collect();
    let mut changes = Vec::new();
    for t in &nonnull {
        let m = t.weight.numer() * &n / t.weight.denom();
        let m: usize = m.try_into().map_err(|_| {
            ProverError::InvalidState(format!("weight {} too finely divided", t.weight))
        })?;
        let (complement, refined) = if m == 1 {
            (Vec::new(), vec![t.environment.clone()])
        } else {
            let mut complement = Vec::new();
            for k in 1..m {
                let l = fresh(format!("{}⊥{k}", t.environment), &taken);
                taken.insert(l.clone());
                complement.push(l);
            }
            let mut refined = Vec::new();
            for j in 1..=m {
                let l = fresh(format!("{}^{j}", t.environment), &taken);
                taken.insert(l.clone());
                refined.push(l);
            }
            (complement, refined)
        };
        changes.push(BasisChange {
            system: t.system.clone(),
            original: t.environment.clone(),
            complement,
            refined,
            rows: helmert_rows(m),
        });
    }
    let rotated_id = format!("F({})", root.id);
    let rotated = apply_fine_grain(root, &changes, &rotated_id)?;
    b.add_state(rotated.clone())?;
    b.push(Payload::FineGrain {
        before: root.id.clone(),
        after: rotated_id.clone(),
        changes,
    })?;

    let mut records = Vec::new();
    let mut refinement: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for t in &rotated.terms {
        let composite = fresh(format!("{}·{}", t.system, t.environment), &taken);
        taken.insert(composite.clone());
        let ancilla = fresh(format!("a[{}]", t.environment), &taken);
        taken.insert(ancilla.clone());
        refinement
            .entry(t.system.clone())
            .or_default()
            .push(composite.clone());
        records.push(AncillaRecord {
            system: t.system.clone(),
            environment: t.environment.clone(),
            ancilla,
            composite,
        });
    }
    let fine_id = format!("A({rotated_id})");
    b.add_state(apply_premeasurement(&rotated, &records, &fine_id)?)?;
    b.push(Payload::AncillaPremeasure {
        before: rotated_id.clone(),
        after: fine_id.clone(),
        records,
    })?;
    Ok((rotated_id, fine_id, refinement))
}

/// Splits every term of weight m_k/N into m_k terms of weight 1/N by an
/// environment basis change, then records the refined environment kets in
/// an ancilla so that the result is again in Schmidt form.
pub fn fine_grain(psi: &RationalSchmidtState) -> Result<FineGraining> {
    let root = psi.as_exact();
    let mut b = Builder::new(root)?;
    let (rotated, fine_id, refinement) = fine_grain_into(&mut b, root)?;
    let state = RationalSchmidtState::try_from(b.state(&fine_id))?;
    Ok(FineGraining {
        state,
        rotated,
        states: b.states,
        steps: b.steps,
        refinement,
    })
}

/// Probabilities m_k/N for every system label: null terms are eliminated,
/// the rest is fine-grained to N equal terms, shown equiprobable, and
/// regrouped.
pub fn derive_born_probabilities(psi: &RationalSchmidtState) -> Result<ProofChain> {
    let root = psi.as_exact();
    let mut b = Builder::new(root)?;
    if !root.zero_labels().is_empty() {
        null_elimination_into(&mut b, root)?;
    }
    let (rotated, fine_id, refinement) = fine_grain_into(&mut b, root)?;
    b.group = Some("equiprobability".into());
    let fine = b.state(&fine_id);
    b.equiprobable(&fine_id, &system_labels(&fine))?;
    b.normalize(&fine_id)?;
    b.group = Some("regroup".into());
    for (label, refined) in &refinement {
        b.push(Payload::EquateCounts {
            rule: CountRule::Regroup {
                coarse: rotated.clone(),
                fine: fine_id.clone(),
                system_label: label.clone(),
                refined: refined.clone(),
            },
        })?;
    }
    b.group = None;
    let conclusion = psi
        .terms()
        .iter()
        .map(|t| (t.system.clone(), t.weight.clone()))
        .collect();
    Ok(b.finish(&root.id, conclusion))
}

/// Full derivation for a state with at least one zero-weight term; every
/// null label is concluded to have probability exactly 0.
pub fn eliminate_null_terms(psi: &RationalSchmidtState) -> Result<ProofChain> {
    if psi.as_exact().zero_labels().is_empty() {
        return Err(ProverError::NothingToEliminate);
    }
    derive_born_probabilities(psi)
}

/// Counting argument over the null block. Auxiliary zero-weight terms are
/// appended so that every merge leaves an untouched null term behind; that
/// term pins the common probability p across the merge, and the block
/// totals N·p = (N−1)·p force p = 0.
fn null_elimination_into(b: &mut Builder, root: &ExactState) -> Result<()> {
    let nulls: Vec<String> = root.zero_labels().into_iter().map(String::from).collect();
    let mut taken: BTreeSet<String> = root
        .terms
        .iter()
        .flat_map(|t| [t.system.clone(), t.environment.clone()])
        .collect();
    let aux_count = if nulls.len() == 1 { 2 } else { 1 };
    let mut aux = Vec::new();
    for i in 1..=aux_count {
        let s = fresh(format!("s∅{i}"), &taken);
        taken.insert(s.clone());
        let e = fresh(format!("e∅{i}"), &taken);
        taken.insert(e.clone());
        aux.push(Term::new(s, e, Q::zero()));
    }

    b.group = Some("null_elimination/padding".into());
    let padded_id = format!("{}⊕0", root.id);
    let mut terms = root.terms.clone();
    terms.extend(aux.iter().cloned());
    let padded = ExactState::new(&padded_id, terms)?;
    b.add_state(padded.clone())?;

    // padded → root by folding each auxiliary term into the first null term
    let first = root
        .term_of(Side::System, &nulls[0])
        .expect("null label")
        .clone();
    let mut current = padded.clone();
    for (i, a) in aux.iter().enumerate() {
        let merge = NullMerge {
            first: first.system.clone(),
            second: a.system.clone(),
            into_system: first.system.clone(),
            into_environment: first.environment.clone(),
        };
        let next_id = if i + 1 == aux.len() {
            root.id.clone()
        } else {
            format!("{}⊕0{}", root.id, "'".repeat(i + 1))
        };
        let next = merge.apply(&current, &next_id)?;
        if next_id != root.id {
            b.add_state(next.clone())?;
        }
        b.push(Payload::MergeNullTerms {
            before: current.id.clone(),
            after: next_id.clone(),
            merge,
        })?;
        b.push(Payload::EquateCounts {
            rule: CountRule::Rearrangement {
                before: current.id.clone(),
                after: next_id,
            },
        })?;
        current = next;
    }

    let mut stage = padded;
    let mut block: Vec<String> = stage.zero_labels().into_iter().map(String::from).collect();
    b.group = Some("null_elimination/0".into());
    b.equiprobable(&stage.id, &block)?;
    let mut t = 0;
    while block.len() >= 3 {
        b.group = Some(format!("null_elimination/{t}"));
        let (x, y) = (block[0].clone(), block[1].clone());
        let tx = stage
            .term_of(Side::System, &x)
            .expect("block label")
            .clone();
        let into_system = fresh(format!("{x}'"), &taken);
        taken.insert(into_system.clone());
        let into_environment = fresh(format!("{}'", tx.environment), &taken);
        taken.insert(into_environment.clone());
        let merge = NullMerge {
            first: x,
            second: y,
            into_system,
            into_environment,
        };
        let next_id = format!("M{}({})", t + 1, root.id);
        let next = merge.apply(&stage, &next_id)?;
        b.add_state(next.clone())?;
        b.push(Payload::MergeNullTerms {
            before: stage.id.clone(),
            after: next_id.clone(),
            merge,
        })?;
        b.push(Payload::EquateCounts {
            rule: CountRule::Rearrangement {
                before: stage.id.clone(),
                after: next_id.clone(),
            },
        })?;
        // merged label first, so the next merge folds it again
        let mut next_block: Vec<String> = vec![next.terms.last().expect("merged").system.clone()];
        next_block.extend(block[2..].iter().cloned());
        b.equiprobable(&next_id, &next_block)?;
        stage = next;
        block = next_block;
        t += 1;
    }
    b.group = None;
    Ok(())
}

/// One Premise III link per term of the pre-measured state
/// `Σ_i |s_i⟩|a_i⟩/√d`, with the conditional table P(s_i | a_j) = δ_ij.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EelSubsumption {
    pub system_dim: usize,
    pub ancilla_dim: usize,
    pub state: RationalSchmidtState,
    pub steps: Vec<ProofStep>,
    /// `(system, ancilla, P(system | ancilla))` for every label pair.
    pub conditional: Vec<(String, String, Q)>,
}

impl EelSubsumption {
    pub fn verify(&self) -> Result<Solution> {
        check_steps(&[self.state.as_exact().clone()], &self.steps)
    }
}

/// Pre-measurement `Σ_i c_i|s_i⟩|a_0⟩ → Σ_i c_i|s_i⟩|a_i⟩` with equal c_i,
/// followed by the correlation links that make the ancilla a record of the
/// system outcome.
pub fn check_eel_subsumption(system_dim: usize, ancilla_dim: usize) -> Result<EelSubsumption> {
    if system_dim < 2 || ancilla_dim < 2 {
        return Err(ProverError::InvalidPremeasurement(format!(
            "dimensions must be at least 2, got {system_dim}×{ancilla_dim}"
        )));
    }
    if ancilla_dim < system_dim {
        return Err(ProverError::InvalidPremeasurement(format!(
            "ancilla dimension {ancilla_dim} cannot record {system_dim} outcomes"
        )));
    }
    let d = system_dim as i64;
    let terms = (1..=system_dim)
        .map(|i| Term::new(format!("s{i}"), format!("a{i}"), Q::new(1, d)))
        .collect();
    let state = RationalSchmidtState::new(terms)?;
    let mut b = Builder::new(state.as_exact())?;
    for t in state.terms() {
        b.push(Payload::CorrelationLink {
            state: state.id().into(),
            system_label: t.system.clone(),
            environment_label: t.environment.clone(),
            tag: Some(EEL_TAG.into()),
        })?;
    }
    let mut conditional = Vec::new();
    for i in 1..=system_dim {
        for j in 1..=system_dim {
            let p = if i == j { Q::one() } else { Q::zero() };
            conditional.push((format!("s{i}"), format!("a{j}"), p));
        }
    }
    Ok(EelSubsumption {
        system_dim,
        ancilla_dim,
        state,
        steps: b.steps,
        conditional,
    })
}

/// Resolved probability of `P(S:label | state)` in a verified solution.
pub fn resolved(sol: &Solution, label: &str, state: &str) -> Option<Q> {
    sol.value(&ProbRef::system(label, state)).cloned()
}
