//! Independent re-execution of proof steps and exact resolution of the
//! probabilities they relate.

use std::collections::{BTreeMap, BTreeSet};

use crate::chain::{
    AncillaRecord, BasisChange, Claim, Construction, CountRule, Justification, Payload, Premise,
    ProbRef, ProofChain, ProofStep,
};
use crate::error::{ProverError, Result};
use crate::rational::Q;
use crate::state::{ExactState, LabelSwap, Side, Term};

/// States and facts visible to a step while it is re-executed.
#[derive(Debug, Default, Clone)]
pub struct Context {
    states: BTreeMap<String, ExactState>,
    premeasurements: BTreeMap<(String, String), Vec<AncillaRecord>>,
}

fn reject(reason: impl Into<String>) -> ProverError {
    ProverError::Rejected {
        step: None,
        reason: reason.into(),
    }
}

impl Context {
    pub fn new(states: &[ExactState]) -> Result<Context> {
        let mut ctx = Context::default();
        for s in states {
            ctx.add_state(s.clone())?;
        }
        Ok(ctx)
    }

    pub fn add_state(&mut self, state: ExactState) -> Result<()> {
        state.validate()?;
        self.add_validated(state)
    }

    pub(crate) fn add_validated(&mut self, state: ExactState) -> Result<()> {
        if let Some(old) = self.states.get(&state.id) {
            if old != &state {
                return Err(reject(format!(
                    "state id `{}` used for two states",
                    state.id
                )));
            }
            return Ok(());
        }
        self.states.insert(state.id.clone(), state);
        Ok(())
    }

    pub fn state(&self, id: &str) -> Result<&ExactState> {
        self.states
            .get(id)
            .ok_or_else(|| reject(format!("unknown state `{id}`")))
    }

    /// Re-executes `payload` and returns the justification and claims it licenses.
    pub fn execute(&mut self, payload: &Payload) -> Result<(Justification, Vec<Claim>)> {
        match payload {
            Payload::SwapCounterswap {
                state,
                system_swap,
                environment_swap,
                system_swapped,
                twice_swapped,
                label,
            } => {
                if system_swap.side != Side::System || environment_swap.side != Side::Environment {
                    return Err(reject("swap sides must be system then environment"));
                }
                let psi = self.state(state)?;
                let image = |swap: &LabelSwap, from: &ExactState, id: &str| {
                    swap.apply(from, id)
                        .map_err(|e| reject(format!("{} on `{}`: {e}", swap.notation(), from.id)))
                };
                let us = image(system_swap, psi, system_swapped)?;
                let ue_us = image(environment_swap, &us, twice_swapped)?;
                if !ue_us.same_terms(psi) {
                    return Err(reject(format!(
                        "`{state}` is not envariant under the swap pair"
                    )));
                }
                if !psi.has_label(Side::System, label) {
                    return Err(reject(format!("`{label}` not a system label of `{state}`")));
                }
                self.add_validated(us)?;
                self.add_validated(ue_us)?;
                Ok((
                    Justification::Premise(Premise::One),
                    vec![Claim::Equal {
                        left: ProbRef::system(label, state),
                        right: ProbRef::system(label, twice_swapped),
                    }],
                ))
            }
            Payload::LocalInvisibility {
                before,
                after,
                operator,
                observed,
                label,
            } => {
                if operator.side == *observed {
                    return Err(reject("operator acts on the observed side"));
                }
                let b = self.state(before)?;
                let a = self.state(after)?;
                if !operator.maps(a, b) {
                    return Err(reject(format!(
                        "`{before}` is not {}{after}",
                        operator.notation()
                    )));
                }
                if !b.has_label(*observed, label) || !a.has_label(*observed, label) {
                    return Err(reject(format!("`{label}` missing on the observed side")));
                }
                let r = |s: &str| ProbRef {
                    side: *observed,
                    label: label.clone(),
                    state: s.to_string(),
                };
                Ok((
                    Justification::Premise(Premise::Two),
                    vec![Claim::Equal {
                        left: r(before),
                        right: r(after),
                    }],
                ))
            }
            Payload::CorrelationLink {
                state,
                system_label,
                environment_label,
                ..
            } => {
                let psi = self.state(state)?;
                if !psi.is_schmidt() {
                    return Err(reject(format!("`{state}` is not in Schmidt form")));
                }
                if !psi.contains_pair(system_label, environment_label) {
                    return Err(reject(format!(
                        "|{system_label}⟩|{environment_label}⟩ is not a term of `{state}`"
                    )));
                }
                Ok((
                    Justification::Premise(Premise::Three),
                    vec![Claim::Equal {
                        left: ProbRef::system(system_label, state),
                        right: ProbRef::environment(environment_label, state),
                    }],
                ))
            }
            Payload::FineGrain {
                before,
                after,
                changes,
            } => {
                let b = self.state(before)?;
                let expected = apply_fine_grain(b, changes, after)?;
                if !expected.same_terms(self.state(after)?) {
                    return Err(reject(format!("`{after}` does not re-execute")));
                }
                let claims = b
                    .terms
                    .iter()
                    .filter(|t| !t.weight.is_zero())
                    .map(|t| Claim::Equal {
                        left: ProbRef::system(&t.system, before),
                        right: ProbRef::system(&t.system, after),
                    })
                    .collect();
                Ok((Justification::Construction(Construction::FineGrain), claims))
            }
            Payload::AncillaPremeasure {
                before,
                after,
                records,
            } => {
                let b = self.state(before)?;
                let expected = apply_premeasurement(b, records, after)?;
                if !expected.same_terms(self.state(after)?) {
                    return Err(reject(format!("`{after}` does not re-execute")));
                }
                self.premeasurements
                    .insert((before.clone(), after.clone()), records.clone());
                Ok((
                    Justification::Construction(Construction::AncillaPremeasure),
                    Vec::new(),
                ))
            }
            Payload::MergeNullTerms {
                before,
                after,
                merge,
            } => {
                let b = self.state(before)?;
                let a = self.state(after)?;
                if !merge.apply(b, "")?.same_terms(a) {
                    return Err(reject(format!("`{after}` is not the merge of `{before}`")));
                }
                let claims = b
                    .terms
                    .iter()
                    .filter(|t| t.system != merge.first && t.system != merge.second)
                    .map(|t| Claim::Equal {
                        left: ProbRef::system(&t.system, before),
                        right: ProbRef::system(&t.system, after),
                    })
                    .collect();
                Ok((Justification::Construction(Construction::NullMerge), claims))
            }
            Payload::EquateCounts { rule } => self.execute_count_rule(rule),
        }
    }

    fn execute_count_rule(&self, rule: &CountRule) -> Result<(Justification, Vec<Claim>)> {
        match rule {
            CountRule::Normalization { state } => {
                let psi = self.state(state)?;
                let terms = psi
                    .labels(Side::System)
                    .into_iter()
                    .map(|l| (Q::one(), ProbRef::system(l, state)))
                    .collect();
                Ok((
                    Justification::Construction(Construction::Normalization),
                    vec![Claim::Linear {
                        terms,
                        rhs: Q::one(),
                    }],
                ))
            }
            CountRule::Regroup {
                coarse,
                fine,
                system_label,
                refined,
            } => {
                let records = self
                    .premeasurements
                    .get(&(coarse.clone(), fine.clone()))
                    .ok_or_else(|| {
                        reject(format!("no pre-measurement from `{coarse}` to `{fine}`"))
                    })?;
                let expected: Vec<&str> = records
                    .iter()
                    .filter(|r| &r.system == system_label)
                    .map(|r| r.composite.as_str())
                    .collect();
                if expected.is_empty()
                    || expected != refined.iter().map(String::as_str).collect::<Vec<_>>()
                {
                    return Err(reject(format!(
                        "refinement of `{system_label}` does not match the records"
                    )));
                }
                let mut terms = vec![(Q::one(), ProbRef::system(system_label, coarse))];
                terms.extend(
                    refined
                        .iter()
                        .map(|l| (-Q::one(), ProbRef::system(l, fine))),
                );
                Ok((
                    Justification::Construction(Construction::Regroup),
                    vec![Claim::Linear {
                        terms,
                        rhs: Q::zero(),
                    }],
                ))
            }
            CountRule::Rearrangement { before, after } => {
                let b = self.state(before)?;
                let a = self.state(after)?;
                if !b.same_vector(a) {
                    return Err(reject(format!(
                        "`{before}` and `{after}` are different vectors"
                    )));
                }
                let mut terms: Vec<(Q, ProbRef)> = b
                    .zero_labels()
                    .into_iter()
                    .map(|l| (Q::one(), ProbRef::system(l, before)))
                    .collect();
                terms.extend(
                    a.zero_labels()
                        .into_iter()
                        .map(|l| (-Q::one(), ProbRef::system(l, after))),
                );
                if terms.is_empty() {
                    return Err(reject("no zero-weight terms to rearrange"));
                }
                Ok((
                    Justification::Construction(Construction::Rearrangement),
                    vec![Claim::Linear {
                        terms,
                        rhs: Q::zero(),
                    }],
                ))
            }
        }
    }

    fn check_ref(&self, r: &ProbRef) -> Result<()> {
        if self.state(&r.state)?.has_label(r.side, &r.label) {
            Ok(())
        } else {
            Err(reject(format!("{r} names an absent label")))
        }
    }
}

/// Checks that `rows` are the rows of an orthogonal m×m matrix whose first
/// row is uniform.
pub fn check_orthogonal_rows(rows: &[(Q, Vec<i64>)]) -> Result<()> {
    let m = rows.len();
    if m == 0 {
        return Err(reject("empty basis change"));
    }
    let (s0, r0) = &rows[0];
    if r0.iter().any(|&x| x != 1) || *s0 != Q::new(1, m as i64) {
        return Err(reject("first row is not the uniform vector"));
    }
    for (i, (scale, v)) in rows.iter().enumerate() {
        if v.len() != m {
            return Err(reject("basis change is not square"));
        }
        let norm: i64 = v.iter().map(|x| x * x).sum();
        if scale * &Q::integer(norm) != Q::one() {
            return Err(reject(format!("row {i} is not normalized")));
        }
        for (_, w) in &rows[i + 1..] {
            let dot: i64 = v.iter().zip(w).map(|(a, b)| a * b).sum();
            if dot != 0 {
                return Err(reject(format!("row {i} is not orthogonal to a later row")));
            }
        }
    }
    Ok(())
}

/// Splits each term `√w|s⟩|ε⟩` into `Σ_j √(w/m)|s⟩|f_j⟩`. With row 0
/// uniform and the other rows orthogonal to it, `Σ_j f_j = √m ε`, so the
/// output is the same vector. Zero-weight terms are dropped.
pub fn apply_fine_grain(
    state: &ExactState,
    changes: &[BasisChange],
    id: &str,
) -> Result<ExactState> {
    let existing: BTreeSet<&str> = state.labels(Side::Environment).into_iter().collect();
    let mut fresh = BTreeSet::new();
    let mut terms = Vec::new();
    let mut used = BTreeSet::new();
    for t in state.terms.iter().filter(|t| !t.weight.is_zero()) {
        let change = changes
            .iter()
            .find(|c| c.system == t.system && c.original == t.environment)
            .ok_or_else(|| {
                reject(format!(
                    "no basis change for |{}⟩|{}⟩",
                    t.system, t.environment
                ))
            })?;
        if !used.insert((&change.system, &change.original)) {
            return Err(reject("repeated basis change"));
        }
        check_orthogonal_rows(&change.rows)?;
        let m = change.rows.len();
        if change.complement.len() != m - 1 || change.refined.len() != m {
            return Err(reject("basis change label count does not match its rows"));
        }
        for l in &change.complement {
            if existing.contains(l.as_str()) || !fresh.insert(l.clone()) {
                return Err(reject(format!("complement ket `{l}` is not fresh")));
            }
        }
        for l in &change.refined {
            let reuses_original = m == 1 && *l == change.original;
            if !reuses_original && (existing.contains(l.as_str()) || !fresh.insert(l.clone())) {
                return Err(reject(format!("refined ket `{l}` is not fresh")));
            }
        }
        let share = &t.weight / &Q::integer(m as i64);
        terms.extend(
            change
                .refined
                .iter()
                .map(|f| Term::new(&t.system, f, share.clone())),
        );
    }
    if used.len() != changes.len() {
        return Err(reject("basis change for a term that is absent or null"));
    }
    ExactState::new(id, terms)
}

/// `|s⟩|f⟩|a_0⟩ → |s⟩|f⟩|a_f⟩`, regrouped as `|s·f⟩|a_f⟩`.
pub fn apply_premeasurement(
    state: &ExactState,
    records: &[AncillaRecord],
    id: &str,
) -> Result<ExactState> {
    if records.len() != state.terms.len() {
        return Err(reject("one ancilla record per term required"));
    }
    let mut ancillas = BTreeSet::new();
    let mut composites = BTreeSet::new();
    let mut terms = Vec::new();
    for t in &state.terms {
        let r = records
            .iter()
            .find(|r| r.system == t.system && r.environment == t.environment)
            .ok_or_else(|| {
                reject(format!(
                    "no ancilla record for |{}⟩|{}⟩",
                    t.system, t.environment
                ))
            })?;
        if !ancillas.insert(&r.ancilla) || !composites.insert(&r.composite) {
            return Err(reject("ancilla or composite labels repeat"));
        }
        terms.push(Term::new(&r.composite, &r.ancilla, t.weight.clone()));
    }
    ExactState::new(id, terms)
}

/// Exact values of every probability pinned down by the claims.
#[derive(Debug, Clone, Default)]
pub struct Solution {
    parent: BTreeMap<ProbRef, ProbRef>,
    values: BTreeMap<ProbRef, Q>,
}

impl Solution {
    fn root(&self, r: &ProbRef) -> ProbRef {
        let mut cur = r.clone();
        while let Some(p) = self.parent.get(&cur) {
            if *p == cur {
                break;
            }
            cur = p.clone();
        }
        cur
    }

    fn find(&mut self, r: &ProbRef) -> ProbRef {
        let root = self.root(r);
        let mut cur = r.clone();
        while cur != root {
            let next = self.parent.insert(cur, root.clone()).expect("on the path");
            cur = next;
        }
        root
    }

    fn union(&mut self, a: &ProbRef, b: &ProbRef) -> Result<()> {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return Ok(());
        }
        let va = self.values.remove(&ra);
        let vb = self.values.remove(&rb);
        let v = match (va, vb) {
            (Some(x), Some(y)) if x != y => {
                return Err(reject(format!("{a} = {x} contradicts {b} = {y}")));
            }
            (x, y) => x.or(y),
        };
        self.parent.insert(ra, rb.clone());
        if let Some(v) = v {
            self.values.insert(rb, v);
        }
        Ok(())
    }

    fn touch(&mut self, r: &ProbRef) {
        self.parent.entry(r.clone()).or_insert_with(|| r.clone());
    }

    pub fn value(&self, r: &ProbRef) -> Option<&Q> {
        self.values.get(&self.root(r))
    }

    pub fn are_equal(&self, a: &ProbRef, b: &ProbRef) -> bool {
        self.root(a) == self.root(b)
    }

    /// Every referenced probability with a determined value.
    pub fn known(&self) -> BTreeMap<ProbRef, Q> {
        self.parent
            .keys()
            .filter_map(|r| self.value(r).map(|v| (r.clone(), v.clone())))
            .collect()
    }

    /// Exact Gauss–Jordan elimination over the equivalence classes; a class
    /// is determined when its pivot row has no free columns left.
    fn solve(&mut self, linear: &[(Vec<(Q, ProbRef)>, Q)]) -> Result<()> {
        let mut columns: BTreeMap<ProbRef, usize> = BTreeMap::new();
        let mut rows: Vec<(BTreeMap<usize, Q>, Q)> = Vec::new();
        for (terms, rhs) in linear {
            let mut row: BTreeMap<usize, Q> = BTreeMap::new();
            let mut rest = rhs.clone();
            for (c, r) in terms {
                let root = self.root(r);
                match self.values.get(&root) {
                    Some(v) => rest = rest - c * v,
                    None => {
                        let n = columns.len();
                        let col = *columns.entry(root).or_insert(n);
                        let e = row.entry(col).or_insert_with(Q::zero);
                        *e = &*e + c;
                    }
                }
            }
            row.retain(|_, c| !c.is_zero());
            rows.push((row, rest));
        }
        let mut pivots: Vec<(usize, usize)> = Vec::new();
        let mut next = 0;
        for col in 0..columns.len() {
            let Some(p) = (next..rows.len()).find(|&i| rows[i].0.contains_key(&col)) else {
                continue;
            };
            rows.swap(next, p);
            let pivot = rows[next].0[&col].clone();
            let (prow, prhs) = {
                let (r, v) = &rows[next];
                let r: BTreeMap<usize, Q> = r.iter().map(|(k, x)| (*k, x / &pivot)).collect();
                (r, v / &pivot)
            };
            rows[next] = (prow.clone(), prhs.clone());
            for (i, (row, rhs)) in rows.iter_mut().enumerate() {
                if i == next {
                    continue;
                }
                let Some(f) = row.get(&col).cloned() else {
                    continue;
                };
                for (k, x) in &prow {
                    let e = row.entry(*k).or_insert_with(Q::zero);
                    *e = &*e - &(&f * x);
                }
                row.retain(|_, c| !c.is_zero());
                *rhs = &*rhs - &(&f * &prhs);
            }
            pivots.push((next, col));
            next += 1;
        }
        for (row, rhs) in &rows[next..] {
            if row.is_empty() && !rhs.is_zero() {
                return Err(reject(format!(
                    "linear claims are inconsistent (residual {rhs})"
                )));
            }
        }
        let roots: BTreeMap<usize, ProbRef> = columns.into_iter().map(|(r, c)| (c, r)).collect();
        for (i, col) in pivots {
            let (row, rhs) = &rows[i];
            if row.len() == 1 {
                if rhs.is_negative() || *rhs > Q::one() {
                    return Err(reject(format!(
                        "{} resolves to {rhs}, outside [0, 1]",
                        roots[&col]
                    )));
                }
                self.values.insert(roots[&col].clone(), rhs.clone());
            }
        }
        Ok(())
    }
}

/// Re-executes `steps` over `states` and resolves the claims. Steps are
/// rejected if their stored claims or justification differ from the
/// re-executed ones.
pub fn check_steps(states: &[ExactState], steps: &[ProofStep]) -> Result<Solution> {
    let mut ctx = Context::new(states)?;
    let mut sol = Solution::default();
    let mut linear = Vec::new();
    let at = |i: usize| {
        move |e: ProverError| match e {
            ProverError::Rejected { reason, .. } => ProverError::Rejected {
                step: Some(i),
                reason,
            },
            other => ProverError::Rejected {
                step: Some(i),
                reason: other.to_string(),
            },
        }
    };
    for (i, step) in steps.iter().enumerate() {
        if step.index != i {
            return Err(at(i)(reject(format!("step numbered {}", step.index))));
        }
        let (justification, claims) = ctx.execute(&step.payload).map_err(at(i))?;
        if justification != step.justification {
            return Err(at(i)(reject(format!(
                "cites {} but re-executes as {justification}",
                step.justification
            ))));
        }
        if claims != step.claims {
            return Err(at(i)(reject(
                "stored claims differ from the re-executed ones",
            )));
        }
        for claim in &claims {
            match claim {
                Claim::Equal { left, right } => {
                    ctx.check_ref(left).map_err(at(i))?;
                    ctx.check_ref(right).map_err(at(i))?;
                    sol.touch(left);
                    sol.touch(right);
                    sol.union(left, right).map_err(at(i))?;
                }
                Claim::Linear { terms, rhs } => {
                    for (_, r) in terms {
                        ctx.check_ref(r).map_err(at(i))?;
                        sol.touch(r);
                    }
                    linear.push((terms.clone(), rhs.clone()));
                }
            }
        }
    }
    sol.solve(&linear)?;
    Ok(sol)
}

/// Verifies a full chain: every step re-executes, and the conclusion is
/// exactly the resolved value of each system label of the target, summing
/// to one.
pub fn verify(chain: &ProofChain) -> Result<Solution> {
    let sol = check_steps(&chain.states, &chain.steps)?;
    let target = chain
        .state(&chain.target)
        .ok_or_else(|| reject(format!("unknown target `{}`", chain.target)))?;
    let labels: BTreeSet<&str> = target.labels(Side::System).into_iter().collect();
    let concluded: BTreeSet<&str> = chain.conclusion.keys().map(String::as_str).collect();
    if labels != concluded {
        return Err(reject(
            "conclusion does not cover exactly the target's system labels",
        ));
    }
    for (label, claimed) in &chain.conclusion {
        let r = ProbRef::system(label, &chain.target);
        match sol.value(&r) {
            Some(v) if v == claimed => {}
            Some(v) => return Err(reject(format!("{r} resolves to {v}, not {claimed}"))),
            None => return Err(reject(format!("{r} is not determined by the steps"))),
        }
    }
    let total: Q = chain.conclusion.values().sum();
    if total != Q::one() {
        return Err(reject(format!("conclusion sums to {total}")));
    }
    Ok(sol)
}
