//! Bipartite states tracked by squared weights on orthonormal labels.
//!
//! A term `(s, e, w)` stands for `√w |s⟩|e⟩` with a non-negative real
//! amplitude, so state identities reduce to comparisons of term sets.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{ProverError, Result};
use crate::rational::Q;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Side {
    #[serde(rename = "S")]
    System,
    #[serde(rename = "E")]
    Environment,
}

impl Side {
    pub fn symbol(self) -> &'static str {
        match self {
            Side::System => "S",
            Side::Environment => "E",
        }
    }

    pub fn other(self) -> Side {
        match self {
            Side::System => Side::Environment,
            Side::Environment => Side::System,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Term {
    pub system: String,
    pub environment: String,
    pub weight: Q,
}

impl Term {
    pub fn new(system: impl Into<String>, environment: impl Into<String>, weight: Q) -> Term {
        Term {
            system: system.into(),
            environment: environment.into(),
            weight,
        }
    }

    pub fn label(&self, side: Side) -> &str {
        match side {
            Side::System => &self.system,
            Side::Environment => &self.environment,
        }
    }

    fn label_mut(&mut self, side: Side) -> &mut String {
        match side {
            Side::System => &mut self.system,
            Side::Environment => &mut self.environment,
        }
    }
}

/// A named state `Σ √w_k |s_k⟩|e_k⟩`. System labels may repeat (for
/// example right after a basis change of the environment); the
/// `(system, environment)` pairs may not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactState {
    pub id: String,
    pub terms: Vec<Term>,
}

impl ExactState {
    pub fn new(id: impl Into<String>, terms: Vec<Term>) -> Result<ExactState> {
        let state = ExactState {
            id: id.into(),
            terms,
        };
        state.validate()?;
        Ok(state)
    }

    pub fn validate(&self) -> Result<()> {
        if self.terms.is_empty() {
            return Err(ProverError::InvalidState(format!(
                "`{}` has no terms",
                self.id
            )));
        }
        let mut pairs = BTreeSet::new();
        for t in &self.terms {
            if t.weight.is_negative() {
                return Err(ProverError::InvalidState(format!(
                    "negative weight {} on {}",
                    t.weight, t.system
                )));
            }
            if !pairs.insert((t.system.as_str(), t.environment.as_str())) {
                return Err(ProverError::InvalidState(format!(
                    "repeated term |{}⟩|{}⟩ in `{}`",
                    t.system, t.environment, self.id
                )));
            }
        }
        let denom = self.terms[0].weight.denom();
        let total = if self.terms.iter().all(|t| t.weight.denom() == denom) {
            let numer: BigInt = self.terms.iter().map(|t| t.weight.numer()).sum();
            Q::from_big(numer, denom.clone())
        } else {
            self.terms.iter().map(|t| &t.weight).sum()
        };
        if total != Q::one() {
            return Err(ProverError::InvalidState(format!(
                "weights of `{}` sum to {total}",
                self.id
            )));
        }
        Ok(())
    }

    /// Distinct labels on one side, in first-appearance order.
    pub fn labels(&self, side: Side) -> Vec<&str> {
        let mut seen = BTreeSet::new();
        self.terms
            .iter()
            .map(|t| t.label(side))
            .filter(|l| seen.insert(*l))
            .collect()
    }

    pub fn has_label(&self, side: Side, label: &str) -> bool {
        self.terms.iter().any(|t| t.label(side) == label)
    }

    pub fn is_schmidt(&self) -> bool {
        [Side::System, Side::Environment].into_iter().all(|side| {
            let mut v: Vec<&str> = self.terms.iter().map(|t| t.label(side)).collect();
            v.sort_unstable();
            v.windows(2).all(|w| w[0] != w[1])
        })
    }

    pub fn term_of(&self, side: Side, label: &str) -> Option<&Term> {
        self.terms.iter().find(|t| t.label(side) == label)
    }

    pub fn contains_pair(&self, system: &str, environment: &str) -> bool {
        self.terms
            .iter()
            .any(|t| t.system == system && t.environment == environment)
    }

    /// Equality as vectors, including zero-weight terms.
    pub fn same_terms(&self, other: &ExactState) -> bool {
        sorted(&self.terms) == sorted(&other.terms)
    }

    /// Equality as vectors; zero-weight terms contribute nothing.
    pub fn same_vector(&self, other: &ExactState) -> bool {
        fn nonzero(s: &ExactState) -> Vec<&Term> {
            let mut v: Vec<&Term> = s.terms.iter().filter(|t| !t.weight.is_zero()).collect();
            v.sort_unstable();
            v
        }
        nonzero(self) == nonzero(other)
    }

    pub fn zero_labels(&self) -> Vec<&str> {
        self.terms
            .iter()
            .filter(|t| t.weight.is_zero())
            .map(|t| t.system.as_str())
            .collect()
    }

    pub fn with_id(mut self, id: impl Into<String>) -> ExactState {
        self.id = id.into();
        self
    }
}

fn sorted(terms: &[Term]) -> Vec<&Term> {
    let mut v: Vec<&Term> = terms.iter().collect();
    v.sort_unstable();
    v
}

impl fmt::Display for ExactState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = ", self.id)?;
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            if t.weight == Q::one() {
                write!(f, "|{}⟩|{}⟩", t.system, t.environment)?;
            } else {
                write!(f, "√({})|{}⟩|{}⟩", t.weight, t.system, t.environment)?;
            }
        }
        Ok(())
    }
}

/// Exchange of two basis labels on one side; a permutation of the basis,
/// hence unitary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSwap {
    pub side: Side,
    pub a: String,
    pub b: String,
}

impl LabelSwap {
    pub fn new(side: Side, a: impl Into<String>, b: impl Into<String>) -> LabelSwap {
        LabelSwap {
            side,
            a: a.into(),
            b: b.into(),
        }
    }

    pub fn apply(&self, state: &ExactState, id: impl Into<String>) -> Result<ExactState> {
        if self.a == self.b {
            return Err(ProverError::InvalidState(format!(
                "trivial swap of `{}`",
                self.a
            )));
        }
        for l in [&self.a, &self.b] {
            if !state.has_label(self.side, l) {
                return Err(ProverError::InvalidState(format!(
                    "swap label `{l}` not in `{}`",
                    state.id
                )));
            }
        }
        let mut terms = state.terms.clone();
        for t in &mut terms {
            let l = t.label_mut(self.side);
            if *l == self.a {
                *l = self.b.clone();
            } else if *l == self.b {
                *l = self.a.clone();
            }
        }
        // a relabeling of a valid state is valid
        Ok(ExactState {
            id: id.into(),
            terms,
        })
    }

    /// Whether applying the swap to `from` gives exactly the terms of `to`,
    /// compared without building the swapped state.
    pub fn maps(&self, from: &ExactState, to: &ExactState) -> bool {
        if self.a == self.b
            || !from.has_label(self.side, &self.a)
            || !from.has_label(self.side, &self.b)
            || from.terms.len() != to.terms.len()
        {
            return false;
        }
        fn name<'a>(swap: &'a LabelSwap, t: &'a Term, side: Side) -> &'a str {
            let l = t.label(side);
            if side != swap.side {
                l
            } else if l == swap.a {
                &swap.b
            } else if l == swap.b {
                &swap.a
            } else {
                l
            }
        }
        let mut x: Vec<(&str, &str, &Q)> = from
            .terms
            .iter()
            .map(|t| {
                (
                    name(self, t, Side::System),
                    name(self, t, Side::Environment),
                    &t.weight,
                )
            })
            .collect();
        let mut y: Vec<(&str, &str, &Q)> = to
            .terms
            .iter()
            .map(|t| (t.system.as_str(), t.environment.as_str(), &t.weight))
            .collect();
        x.sort_unstable();
        y.sort_unstable();
        x == y
    }

    pub fn notation(&self) -> String {
        format!("U_{}({}↔{})", self.side.symbol(), self.a, self.b)
    }
}

/// Replaces two zero-weight terms by a single zero-weight term.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NullMerge {
    pub first: String,
    pub second: String,
    pub into_system: String,
    pub into_environment: String,
}

impl NullMerge {
    pub fn apply(&self, state: &ExactState, id: impl Into<String>) -> Result<ExactState> {
        let mut removed = Vec::new();
        for l in [&self.first, &self.second] {
            let t = state
                .term_of(Side::System, l)
                .ok_or_else(|| ProverError::InvalidState(format!("`{l}` not in `{}`", state.id)))?;
            if !t.weight.is_zero() {
                return Err(ProverError::InvalidState(format!(
                    "`{l}` has nonzero weight"
                )));
            }
            removed.push(t.clone());
        }
        if self.first == self.second {
            return Err(ProverError::InvalidState(
                "merge of a term with itself".into(),
            ));
        }
        let mut terms: Vec<Term> = state
            .terms
            .iter()
            .filter(|t| !removed.contains(t))
            .cloned()
            .collect();
        if terms
            .iter()
            .any(|t| t.system == self.into_system || t.environment == self.into_environment)
        {
            return Err(ProverError::InvalidState(format!(
                "merged labels `{}`/`{}` collide with a remaining term",
                self.into_system, self.into_environment
            )));
        }
        terms.push(Term::new(
            &self.into_system,
            &self.into_environment,
            Q::zero(),
        ));
        ExactState::new(id, terms)
    }
}

/// Validated Schmidt-form state with rational squared amplitudes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ExactState", into = "ExactState")]
pub struct RationalSchmidtState(ExactState);

impl TryFrom<ExactState> for RationalSchmidtState {
    type Error = ProverError;

    fn try_from(state: ExactState) -> Result<Self> {
        state.validate()?;
        if !state.is_schmidt() {
            return Err(ProverError::InvalidState(format!(
                "labels of `{}` repeat on one side",
                state.id
            )));
        }
        Ok(RationalSchmidtState(state))
    }
}

impl From<RationalSchmidtState> for ExactState {
    fn from(s: RationalSchmidtState) -> ExactState {
        s.0
    }
}

pub const DEFAULT_STATE_ID: &str = "ψ";

impl RationalSchmidtState {
    pub fn new(terms: Vec<Term>) -> Result<RationalSchmidtState> {
        Self::try_from(ExactState {
            id: DEFAULT_STATE_ID.into(),
            terms,
        })
    }

    /// Terms `|s_k⟩|e_k⟩` with the given weights.
    pub fn from_weights(weights: &[Q]) -> Result<RationalSchmidtState> {
        Self::new(
            weights
                .iter()
                .enumerate()
                .map(|(k, w)| Term::new(format!("s{k}"), format!("e{k}"), w.clone()))
                .collect(),
        )
    }

    pub fn with_id(self, id: impl Into<String>) -> RationalSchmidtState {
        RationalSchmidtState(self.0.with_id(id))
    }

    pub fn id(&self) -> &str {
        &self.0.id
    }

    pub fn terms(&self) -> &[Term] {
        &self.0.terms
    }

    pub fn as_exact(&self) -> &ExactState {
        &self.0
    }

    /// Least N such that every weight is m_k/N with integer m_k.
    pub fn common_denominator(&self) -> BigInt {
        self.terms()
            .iter()
            .fold(BigInt::from(1), |acc, t| acc.lcm(t.weight.denom()))
    }

    /// The integers m_k over [`Self::common_denominator`].
    pub fn counts(&self) -> Vec<BigInt> {
        let n = self.common_denominator();
        self.terms()
            .iter()
            .map(|t| t.weight.numer() * &n / t.weight.denom())
            .collect()
    }

    pub fn weights(&self) -> BTreeMap<String, Q> {
        self.terms()
            .iter()
            .map(|t| (t.system.clone(), t.weight.clone()))
            .collect()
    }

    pub fn is_equal_amplitude(&self) -> bool {
        self.terms().windows(2).all(|w| w[0].weight == w[1].weight)
    }
}

impl fmt::Display for RationalSchmidtState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bell() -> RationalSchmidtState {
        RationalSchmidtState::from_weights(&[Q::new(1, 2), Q::new(1, 2)]).unwrap()
    }

    #[test]
    fn validation() {
        assert!(RationalSchmidtState::from_weights(&[Q::new(1, 2), Q::new(1, 3)]).is_err());
        assert!(RationalSchmidtState::from_weights(&[Q::new(3, 2), Q::new(-1, 2)]).is_err());
        let repeated = vec![
            Term::new("s0", "e0", Q::new(1, 2)),
            Term::new("s0", "e1", Q::new(1, 2)),
        ];
        assert!(ExactState::new("x", repeated.clone()).is_ok());
        assert!(RationalSchmidtState::new(repeated).is_err());
        let dup = vec![
            Term::new("s0", "e0", Q::new(1, 2)),
            Term::new("s0", "e0", Q::new(1, 2)),
        ];
        assert!(ExactState::new("x", dup).is_err());
    }

    #[test]
    fn counts_over_common_denominator() {
        let s = RationalSchmidtState::from_weights(&[Q::new(3, 8), Q::new(1, 2), Q::new(1, 8)])
            .unwrap();
        assert_eq!(s.common_denominator(), BigInt::from(8));
        assert_eq!(
            s.counts(),
            vec![BigInt::from(3), BigInt::from(4), BigInt::from(1)]
        );
    }

    #[test]
    fn swap_and_counterswap_restore_bell() {
        let psi = bell();
        let us = LabelSwap::new(Side::System, "s0", "s1")
            .apply(psi.as_exact(), "a")
            .unwrap();
        assert!(!us.same_terms(psi.as_exact()));
        let ue_us = LabelSwap::new(Side::Environment, "e0", "e1")
            .apply(&us, "b")
            .unwrap();
        assert!(ue_us.same_terms(psi.as_exact()));
    }

    #[test]
    fn swap_needs_present_labels() {
        let psi = bell();
        assert!(LabelSwap::new(Side::System, "s0", "s9")
            .apply(psi.as_exact(), "a")
            .is_err());
        assert!(LabelSwap::new(Side::System, "s0", "s0")
            .apply(psi.as_exact(), "a")
            .is_err());
    }

    #[test]
    fn merge_null_terms() {
        let s = RationalSchmidtState::from_weights(&[Q::one(), Q::zero(), Q::zero()]).unwrap();
        let m = NullMerge {
            first: "s1".into(),
            second: "s2".into(),
            into_system: "s1'".into(),
            into_environment: "e1'".into(),
        };
        let out = m.apply(s.as_exact(), "m").unwrap();
        assert_eq!(out.terms.len(), 2);
        assert!(out.same_vector(s.as_exact()));
        let bad = NullMerge {
            first: "s0".into(),
            ..m
        };
        assert!(bad.apply(s.as_exact(), "m").is_err());
    }

    #[test]
    fn serde_validates() {
        let json = serde_json::to_string(&bell()).unwrap();
        assert_eq!(
            serde_json::from_str::<RationalSchmidtState>(&json).unwrap(),
            bell()
        );
        let broken = json.replace("1/2", "1/3");
        assert!(serde_json::from_str::<RationalSchmidtState>(&broken).is_err());
    }
}
