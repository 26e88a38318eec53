//! Unitary operators on labeled spaces, lifting to composite spaces, and
//! application to kets.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::space::SpaceDescriptor;
use crate::state::Ket;

pub const UNITARY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryOp {
    space: SpaceDescriptor,
    matrix: CMatrix,
    label: String,
    /// Basis indices whose population must be zero when the operator is
    /// applied (states the physical element would push out of the modeled
    /// window).
    guarded: BTreeSet<usize>,
}

impl UnitaryOp {
    pub fn new(space: SpaceDescriptor, matrix: CMatrix, label: impl Into<String>) -> Result<Self> {
        let d = space.dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::SpaceMismatch(format!(
                "{}x{} matrix for a space of dimension {d}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let dev = linalg::unitarity_deviation(&matrix);
        if dev > UNITARY_TOL {
            return Err(Error::NotUnitary(dev));
        }
        Ok(UnitaryOp {
            space,
            matrix,
            label: label.into(),
            guarded: BTreeSet::new(),
        })
    }

    pub fn identity(space: &SpaceDescriptor) -> Self {
        let d = space.dim();
        UnitaryOp {
            space: space.clone(),
            matrix: CMatrix::identity(d, d),
            label: "I".into(),
            guarded: BTreeSet::new(),
        }
    }

    pub(crate) fn with_guard(mut self, guarded: BTreeSet<usize>) -> Self {
        self.guarded = guarded;
        self
    }

    pub fn space(&self) -> &SpaceDescriptor {
        &self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn guarded(&self) -> &BTreeSet<usize> {
        &self.guarded
    }

    pub fn dagger(&self) -> UnitaryOp {
        UnitaryOp {
            space: self.space.clone(),
            matrix: self.matrix.adjoint(),
            label: format!("({})†", self.label),
            // Guarded states are fixed points of every guarded constructor.
            guarded: self.guarded.clone(),
        }
    }

    /// `self · other` (other acts first). Both must live on the same space,
    /// or be liftable to the union of their subsystems when disjoint.
    pub fn compose(&self, other: &UnitaryOp) -> Result<UnitaryOp> {
        let (a, b) = if self.space == other.space {
            (self.clone(), other.clone())
        } else {
            let joint = joint_space(&self.space, &other.space)?;
            (self.lift(&joint)?, other.lift(&joint)?)
        };
        let mut guarded = b.guarded.clone();
        // An input is guarded if b sends any of it into a guarded state of a.
        for &g in &a.guarded {
            for j in 0..b.matrix.ncols() {
                if b.matrix[(g, j)].norm() > 1e-12 {
                    guarded.insert(j);
                }
            }
        }
        Ok(UnitaryOp {
            space: a.space.clone(),
            matrix: &a.matrix * &b.matrix,
            label: format!("{}·{}", a.label, b.label),
            guarded,
        })
    }

    /// `self ⊗ other` on the concatenated space.
    pub fn tensor(&self, other: &UnitaryOp) -> Result<UnitaryOp> {
        let space = self.space.product(&other.space)?;
        let d_other = other.space.dim();
        let mut guarded = BTreeSet::new();
        for &g in &self.guarded {
            for j in 0..d_other {
                guarded.insert(g * d_other + j);
            }
        }
        for &g in &other.guarded {
            for i in 0..self.space.dim() {
                guarded.insert(i * d_other + g);
            }
        }
        Ok(UnitaryOp {
            space,
            matrix: linalg::kron(&self.matrix, &other.matrix),
            label: format!("{}⊗{}", self.label, other.label),
            guarded,
        })
    }

    /// Extends the operator by the identity on every subsystem of `full`
    /// that it does not act on. Subsystems may appear in any order in
    /// `full`; each must carry identical basis labels.
    pub fn lift(&self, full: &SpaceDescriptor) -> Result<UnitaryOp> {
        if &self.space == full {
            return Ok(self.clone());
        }
        let positions = self
            .space
            .subsystems()
            .iter()
            .map(|s| {
                let p = full.position(&s.id).map_err(|_| {
                    Error::SpaceMismatch(format!("subsystem `{}` absent from target space", s.id))
                })?;
                if full.subsystems()[p] != *s {
                    return Err(Error::SpaceMismatch(format!(
                        "subsystem `{}` has different basis labels in target space",
                        s.id
                    )));
                }
                Ok(p)
            })
            .collect::<Result<Vec<_>>>()?;
        let rest: Vec<usize> = (0..full.subsystems().len())
            .filter(|p| !positions.contains(p))
            .collect();
        let d = full.dim();
        let digits: Vec<Vec<usize>> = (0..d).map(|i| full.unflatten(i)).collect();
        let local: Vec<usize> = digits
            .iter()
            .map(|dg| {
                self.space
                    .flatten(&positions.iter().map(|&p| dg[p]).collect::<Vec<_>>())
            })
            .collect();
        let mut matrix = CMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                if rest.iter().all(|&p| digits[i][p] == digits[j][p]) {
                    matrix[(i, j)] = self.matrix[(local[i], local[j])];
                }
            }
        }
        let guarded = (0..d)
            .filter(|i| self.guarded.contains(&local[*i]))
            .collect();
        Ok(UnitaryOp {
            space: full.clone(),
            matrix,
            label: self.label.clone(),
            guarded,
        })
    }

    /// Applies the operator, lifting it to `psi`'s space when it acts on a
    /// subset of the subsystems.
    pub fn apply(&self, psi: &Ket) -> Result<Ket> {
        let op = if &self.space == psi.space() {
            std::borrow::Cow::Borrowed(self)
        } else {
            std::borrow::Cow::Owned(self.lift(psi.space())?)
        };
        for &g in &op.guarded {
            let a = psi.amplitudes()[g];
            if a.norm_sqr() > 1e-24 {
                return Err(Error::OamOverflow(psi.space().basis_name(g)));
            }
        }
        Ket::new(psi.space().clone(), &op.matrix * psi.amplitudes())
    }

    /// Largest elementwise deviation from `other` after removing the best
    /// global phase.
    pub fn phase_insensitive_distance(&self, other: &UnitaryOp) -> Result<f64> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch("operators on different spaces".into()));
        }
        let overlap = linalg::trace(&(self.matrix.adjoint() * &other.matrix));
        let phase = if overlap.norm() > 1e-15 {
            overlap / overlap.norm()
        } else {
            linalg::ONE
        };
        Ok(linalg::max_abs_diff(
            &self.matrix.map(|v| v * phase),
            &other.matrix,
        ))
    }
}

/// `u · psi` with automatic lifting.
pub fn apply(u: &UnitaryOp, psi: &Ket) -> Result<Ket> {
    u.apply(psi)
}

pub fn lift(u: &UnitaryOp, full: &SpaceDescriptor) -> Result<UnitaryOp> {
    u.lift(full)
}

fn joint_space(a: &SpaceDescriptor, b: &SpaceDescriptor) -> Result<SpaceDescriptor> {
    let mut subsystems = a.subsystems().to_vec();
    for s in b.subsystems() {
        match subsystems.iter().find(|t| t.id == s.id) {
            Some(t) if t != s => {
                return Err(Error::SpaceMismatch(format!(
                    "subsystem `{}` has conflicting bases",
                    s.id
                )))
            }
            Some(_) => {}
            None => subsystems.push(s.clone()),
        }
    }
    SpaceDescriptor::try_from(subsystems)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, ONE, ZERO};
    use crate::state::tensor;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn s_space() -> SpaceDescriptor {
        SpaceDescriptor::single("s", &["s1", "s2"]).unwrap()
    }
    fn e_space() -> SpaceDescriptor {
        SpaceDescriptor::single("e", &["e1", "e2"]).unwrap()
    }
    fn flip(space: SpaceDescriptor, label: &str) -> UnitaryOp {
        UnitaryOp::new(
            space,
            CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
            label,
        )
        .unwrap()
    }

    fn bell() -> Ket {
        let space = s_space().product(&e_space()).unwrap();
        let h = c(FRAC_1_SQRT_2, 0.0);
        Ket::from_terms(&space, &[(h, &["s1", "e1"]), (h, &["s2", "e2"])]).unwrap()
    }

    #[test]
    fn rejects_non_unitary() {
        let m = CMatrix::from_row_slice(2, 2, &[ONE, ONE, ZERO, ONE]);
        assert!(matches!(
            UnitaryOp::new(s_space(), m, "x"),
            Err(Error::NotUnitary(_))
        ));
    }

    #[test]
    fn swap_pair_leaves_bell_invariant() {
        let psi = bell();
        let both = flip(s_space(), "u_S")
            .tensor(&flip(e_space(), "u_E"))
            .unwrap();
        assert!(both.apply(&psi).unwrap().approx_eq_up_to_phase(&psi, 1e-12));
    }

    #[test]
    fn system_swap_alone() {
        let psi = bell();
        let out = flip(s_space(), "u_S").apply(&psi).unwrap();
        let h = c(FRAC_1_SQRT_2, 0.0);
        let expected =
            Ket::from_terms(psi.space(), &[(h, &["s2", "e1"]), (h, &["s1", "e2"])]).unwrap();
        assert!(out.approx_eq_up_to_phase(&expected, 1e-12));
    }

    #[test]
    fn identity_application() {
        let psi = bell();
        let out = UnitaryOp::identity(psi.space()).apply(&psi).unwrap();
        assert_eq!(out, psi);
    }

    #[test]
    fn lift_products_match_tensor() {
        let full = s_space().product(&e_space()).unwrap();
        let us = flip(s_space(), "u_S").lift(&full).unwrap();
        let ue = flip(e_space(), "u_E").lift(&full).unwrap();
        let direct = flip(s_space(), "u_S")
            .tensor(&flip(e_space(), "u_E"))
            .unwrap();
        assert_eq!(us.matrix() * ue.matrix(), *direct.matrix());
        assert_eq!(ue.matrix() * us.matrix(), us.matrix() * ue.matrix());
    }

    #[test]
    fn lift_respects_subsystem_order() {
        let full = e_space().product(&s_space()).unwrap();
        let us = flip(s_space(), "u_S").lift(&full).unwrap();
        let psi = tensor(
            &Ket::basis(&e_space(), &["e2"]).unwrap(),
            &Ket::basis(&s_space(), &["s1"]).unwrap(),
        )
        .unwrap();
        let out = us.apply(&psi).unwrap();
        assert_eq!(out.amplitude(&["e2", "s2"]).unwrap(), ONE);
    }

    #[test]
    fn lift_missing_subsystem() {
        let other = SpaceDescriptor::single("x", &["0", "1"]).unwrap();
        assert!(matches!(
            flip(s_space(), "u").lift(&other),
            Err(Error::SpaceMismatch(_))
        ));
        let relabeled = SpaceDescriptor::single("s", &["a", "b"]).unwrap();
        assert!(flip(s_space(), "u").lift(&relabeled).is_err());
    }

    #[test]
    fn lift_identity_is_identity() {
        let full = s_space().product(&e_space()).unwrap();
        let lifted = UnitaryOp::identity(&s_space()).lift(&full).unwrap();
        assert_eq!(*lifted.matrix(), CMatrix::identity(4, 4));
    }

    #[test]
    fn compose_lifts_disjoint_operands() {
        let ue_us = flip(e_space(), "u_E")
            .compose(&flip(s_space(), "u_S"))
            .unwrap();
        let psi = bell();
        assert_eq!(ue_us.space().ids(), vec!["e", "s"]);
        assert!(ue_us
            .apply(&psi)
            .unwrap()
            .approx_eq_up_to_phase(&psi, 1e-12));
    }
}
