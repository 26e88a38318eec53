//! Floating-point views of exact states, for cross-checks against the
//! numerical simulator.

use std::collections::BTreeMap;

use envlab_core::linalg::{c, CMatrix};
use envlab_core::measurement::born::born_probabilities;
use envlab_core::measurement::{tomography_projectors, ID_SEPARATOR};
use envlab_core::operator::UnitaryOp;
use envlab_core::state::{density_of, Ket};
use envlab_core::{ProjectorMode, SpaceDescriptor};

use crate::error::Result;
use crate::state::{ExactState, LabelSwap, Side};

pub const SYSTEM_ID: &str = "S";
pub const ENVIRONMENT_ID: &str = "E";
/// Basis label added to a side with a single label, since subsystems
/// need dimension ≥ 2.
pub const PADDING_LABEL: &str = "∅";

/// True iff `U_E·U_S·ψ` equals ψ up to a global phase within `tol`.
pub fn is_envariant(
    psi: &Ket,
    u_s: &UnitaryOp,
    u_e: &UnitaryOp,
    tol: f64,
) -> envlab_core::Result<bool> {
    let full = psi.space();
    let us = u_s.lift(full)?;
    let ue = u_e.lift(full)?;
    let out = ue.apply(&us.apply(psi)?)?;
    Ok(out.phase_distance(psi)? <= tol)
}

fn side_labels(state: &ExactState, side: Side) -> Vec<String> {
    let mut labels: Vec<String> = state.labels(side).into_iter().map(String::from).collect();
    if labels.len() == 1 {
        labels.push(PADDING_LABEL.into());
    }
    labels
}

/// Two-subsystem space `S ⊗ E` spanned by the state's labels.
pub fn space_of(state: &ExactState) -> Result<SpaceDescriptor> {
    Ok(SpaceDescriptor::new([
        (SYSTEM_ID, side_labels(state, Side::System)),
        (ENVIRONMENT_ID, side_labels(state, Side::Environment)),
    ])?)
}

/// `Σ √w |s⟩|e⟩` as a numeric ket.
pub fn to_ket(state: &ExactState) -> Result<Ket> {
    let space = space_of(state)?;
    let amps: Vec<_> = state
        .terms
        .iter()
        .map(|t| {
            (
                c(t.weight.to_f64().sqrt(), 0.0),
                [t.system.as_str(), t.environment.as_str()],
            )
        })
        .collect();
    let terms: Vec<_> = amps.iter().map(|(a, l)| (*a, &l[..])).collect();
    Ok(Ket::from_terms(&space, &terms)?)
}

/// Permutation unitary of a label swap on its own subsystem.
pub fn swap_unitary(swap: &LabelSwap, space: &SpaceDescriptor) -> Result<UnitaryOp> {
    let id = match swap.side {
        Side::System => SYSTEM_ID,
        Side::Environment => ENVIRONMENT_ID,
    };
    let sub = space.subsystem(id)?;
    let (a, b) = (sub.label_index(&swap.a)?, sub.label_index(&swap.b)?);
    let d = sub.dim();
    let mut m = CMatrix::zeros(d, d);
    for i in 0..d {
        let j = if i == a {
            b
        } else if i == b {
            a
        } else {
            i
        };
        m[(j, i)] = c(1.0, 0.0);
    }
    let local = SpaceDescriptor::new([(id, sub.labels.clone())])?;
    Ok(UnitaryOp::new(local, m, swap.notation())?)
}

/// System marginals `Σ_e |⟨s,e|ψ⟩|²` from the simulator's Born evaluator.
pub fn numeric_system_probabilities(state: &ExactState) -> Result<BTreeMap<String, f64>> {
    let ket = to_ket(state)?;
    let rho = density_of(&ket)?;
    let set = tomography_projectors(ProjectorMode::Basis, ket.space())?;
    let table = born_probabilities(&rho, &set)?;
    let mut out: BTreeMap<String, f64> = BTreeMap::new();
    for (id, p) in &table.entries {
        let system = id.split(ID_SEPARATOR).next().unwrap_or(id);
        if system != PADDING_LABEL {
            *out.entry(system.to_string()).or_default() += p;
        }
    }
    Ok(out)
}
