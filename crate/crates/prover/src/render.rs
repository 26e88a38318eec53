//! Plain-text rendering of proof chains.

use std::fmt::Write;

use crate::chain::{CountRule, Payload, ProofChain, ProofStep};

fn describe(step: &ProofStep) -> String {
    match &step.payload {
        Payload::SwapCounterswap {
            state,
            system_swap,
            environment_swap,
            ..
        } => format!(
            "{}{}|{state}⟩ = |{state}⟩",
            environment_swap.notation(),
            system_swap.notation()
        ),
        Payload::LocalInvisibility {
            before,
            after,
            operator,
            ..
        } => format!(
            "|{before}⟩ = {}|{after}⟩ acts away from the observed side",
            operator.notation()
        ),
        Payload::CorrelationLink {
            state,
            system_label,
            environment_label,
            tag,
        } => {
            let mut s =
                format!("|{system_label}⟩|{environment_label}⟩ is a Schmidt term of |{state}⟩");
            if let Some(tag) = tag {
                write!(s, " [{tag}]").expect("string write");
            }
            s
        }
        Payload::FineGrain {
            before,
            after,
            changes,
        } => {
            let mut s =
                format!("|{after}⟩ re-expresses |{before}⟩ in a refined environment basis:");
            for c in changes {
                let kets: Vec<String> = std::iter::once(c.original.clone())
                    .chain(c.complement.iter().cloned())
                    .collect();
                for (j, f) in c.refined.iter().enumerate() {
                    let mut combo = String::new();
                    for (k, (scale, row)) in c.rows.iter().enumerate() {
                        let x = row[j];
                        if x == 0 {
                            continue;
                        }
                        let sign = if x < 0 {
                            "−"
                        } else if combo.is_empty() {
                            ""
                        } else {
                            "+"
                        };
                        let mag = x.unsigned_abs();
                        let coef = if mag == 1 {
                            String::new()
                        } else {
                            mag.to_string()
                        };
                        write!(combo, " {sign}{coef}√({scale})|{}⟩", kets[k])
                            .expect("string write");
                    }
                    write!(s, "\n      |{f}⟩ ={combo}").expect("string write");
                }
            }
            s
        }
        Payload::AncillaPremeasure {
            before,
            after,
            records,
        } => {
            let pairs: Vec<String> = records
                .iter()
                .map(|r| {
                    format!(
                        "|{}⟩|{}⟩ → |{}⟩|{}⟩",
                        r.system, r.environment, r.composite, r.ancilla
                    )
                })
                .collect();
            format!(
                "|{before}⟩ → |{after}⟩ by an ancilla record: {}",
                pairs.join(", ")
            )
        }
        Payload::MergeNullTerms {
            before,
            after,
            merge,
        } => format!(
            "0·|{}⟩ + 0·|{}⟩ in |{before}⟩ combined into 0·|{}⟩|{}⟩ of |{after}⟩",
            merge.first, merge.second, merge.into_system, merge.into_environment
        ),
        Payload::EquateCounts { rule } => match rule {
            CountRule::Normalization { state } => format!("outcomes of |{state}⟩ are exhaustive"),
            CountRule::Regroup { system_label, .. } => {
                format!("outcome {system_label} is the union of its refinements")
            }
            CountRule::Rearrangement { before, after } => {
                format!("|{before}⟩ and |{after}⟩ are the same vector")
            }
        },
    }
}

/// Human-readable listing: states, numbered steps with their premise and
/// claims, and the conclusion.
pub fn pretty(chain: &ProofChain) -> String {
    let mut out = String::new();
    let w = &mut out;
    writeln!(w, "States:").expect("string write");
    for s in &chain.states {
        writeln!(w, "  {s}").expect("string write");
    }
    writeln!(w, "Steps:").expect("string write");
    for step in &chain.steps {
        let group = step
            .group
            .as_deref()
            .map(|g| format!(" <{g}>"))
            .unwrap_or_default();
        writeln!(
            w,
            "  {:>3}. [{}]{group} {}",
            step.index + 1,
            step.justification,
            describe(step)
        )
        .expect("string write");
        for claim in &step.claims {
            writeln!(w, "       ⇒ {claim}").expect("string write");
        }
    }
    writeln!(w, "Conclusion:").expect("string write");
    for (label, p) in &chain.conclusion {
        writeln!(w, "  P(|{label}⟩ | {}) = {p}", chain.target).expect("string write");
    }
    writeln!(w, "Axioms: {}", chain.metadata.axioms.join("; ")).expect("string write");
    writeln!(w, "Assumed: {}", chain.metadata.assumed_credo.join("; ")).expect("string write");
    out
}
