//! Constructors for the optical unitaries: label swaps, wave plates, the
//! q-plate, and the cylindrical-lens mode converter.
//!
//! Polarization (SAM) is expressed in the circular basis `{R, L}` with
//! `|H⟩ = (|R⟩ + |L⟩)/√2`, `|R⟩ = (|H⟩ − i|V⟩)/√2`, `|L⟩ = (|H⟩ + i|V⟩)/√2`.
//! OAM basis labels are signed integers rendered as `-2, -1, 0, +1, +2`.

use std::collections::BTreeSet;
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use num_complex::Complex64;

use crate::linalg::{c, CMatrix, I, ONE, ZERO};
use crate::operator::UnitaryOp;
use crate::space::SpaceDescriptor;

pub const SAM_LABELS: [&str; 2] = ["R", "L"];
pub const OAM_PAIR_LABELS: [&str; 2] = ["+1", "-1"];
/// Window used by the preparation pipelines.
pub const DEFAULT_OAM_WINDOW: RangeInclusive<i32> = -2..=2;

pub fn oam_label(l: i32) -> String {
    if l > 0 {
        format!("+{l}")
    } else {
        l.to_string()
    }
}

pub fn parse_oam_label(label: &str) -> Option<i32> {
    label.trim_start_matches('+').parse().ok()
}

pub fn sam_space(id: &str) -> SpaceDescriptor {
    SpaceDescriptor::single(id, &SAM_LABELS).expect("static labels")
}

pub fn oam_pair_space(id: &str) -> SpaceDescriptor {
    SpaceDescriptor::single(id, &OAM_PAIR_LABELS).expect("static labels")
}

pub fn oam_window_space(id: &str, window: RangeInclusive<i32>) -> Result<SpaceDescriptor> {
    let labels: Vec<String> = window.map(oam_label).collect();
    SpaceDescriptor::new([(id, labels)])
}

/// Exchange of two basis labels within one subsystem.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwapSpec {
    pub subsystem: String,
    pub label_pair: (String, String),
}

impl SwapSpec {
    pub fn new(subsystem: &str, a: &str, b: &str) -> Self {
        SwapSpec {
            subsystem: subsystem.into(),
            label_pair: (a.into(), b.into()),
        }
    }
}

/// `|a⟩⟨b| + |b⟩⟨a|` plus identity on the other labels of the subsystem.
/// The returned operator lives on the single subsystem named in `spec`.
pub fn swap_operator(spec: &SwapSpec, space: &SpaceDescriptor) -> Result<UnitaryOp> {
    let sub = space.subsystem(&spec.subsystem)?;
    let (a, b) = (&spec.label_pair.0, &spec.label_pair.1);
    let ia = sub.label_index(a)?;
    let ib = sub.label_index(b)?;
    if ia == ib {
        return Err(Error::InvalidParameter(format!(
            "swap needs two distinct labels, got `{a}` twice"
        )));
    }
    let d = sub.dim();
    let mut m = CMatrix::identity(d, d);
    m[(ia, ia)] = ZERO;
    m[(ib, ib)] = ZERO;
    m[(ia, ib)] = ONE;
    m[(ib, ia)] = ONE;
    let single = space.select(&[&spec.subsystem])?;
    UnitaryOp::new(single, m, format!("swap[{}:{a}<->{b}]", spec.subsystem))
}

/// Jones matrix of a linear retarder in the `{H, V}` basis.
fn retarder_hv(retardance: f64, angle: f64) -> CMatrix {
    let (s, co) = angle.sin_cos();
    let fast = c(0.0, -retardance / 2.0).exp();
    let slow = c(0.0, retardance / 2.0).exp();
    let off = (fast - slow) * co * s;
    CMatrix::from_row_slice(
        2,
        2,
        &[
            fast * co * co + slow * s * s,
            off,
            off,
            fast * s * s + slow * co * co,
        ],
    )
}

/// Columns are |R⟩ and |L⟩ written in the {H, V} basis.
fn circular_from_linear() -> CMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_row_slice(2, 2, &[c(h, 0.0), c(h, 0.0), -I * h, I * h])
}

fn retarder(sam_id: &str, retardance: f64, angle: f64, label: String) -> Result<UnitaryOp> {
    let t = circular_from_linear();
    let m = t.adjoint() * retarder_hv(retardance, angle) * &t;
    UnitaryOp::new(sam_space(sam_id), m, label)
}

/// Half-wave plate with its fast axis at `angle`. At `angle = 0` it equals
/// `−i(|R⟩⟨L| + |L⟩⟨R|)`, the SAM swap up to global phase.
pub fn half_wave_plate(sam_id: &str, angle: f64) -> Result<UnitaryOp> {
    retarder(sam_id, std::f64::consts::PI, angle, format!("HWP({angle})"))
}

pub fn quarter_wave_plate(sam_id: &str, angle: f64) -> Result<UnitaryOp> {
    retarder(
        sam_id,
        std::f64::consts::FRAC_PI_2,
        angle,
        format!("QWP({angle})"),
    )
}

/// Fast-axis angle at which the half-wave plate acts as the SAM swap.
pub const HWP_SWAP_ANGLE: f64 = 0.0;

/// Tuned, lossless q-plate of charge `q` on `sam ⊗ oam`:
/// `|R,ℓ⟩ → |L,ℓ−2q⟩` and `|L,ℓ⟩ → |R,ℓ+2q⟩`.
///
/// Inside a finite OAM window some inputs have no image. Those states are
/// left fixed so that the matrix stays unitary, and they are guarded:
/// applying the operator to a ket with population there fails with
/// `OamOverflow`.
pub fn q_plate(
    sam_id: &str,
    oam_id: &str,
    q: f64,
    window: RangeInclusive<i32>,
) -> Result<UnitaryOp> {
    let shift = 2.0 * q;
    if shift.fract() != 0.0 || shift == 0.0 {
        return Err(Error::InvalidParameter(format!(
            "q-plate charge must be a nonzero half-integer, got {q}"
        )));
    }
    let shift = shift as i32;
    let oam = oam_window_space(oam_id, window.clone())?;
    let space = sam_space(sam_id).product(&oam)?;
    let d = space.dim();
    let mut m = CMatrix::zeros(d, d);
    let mut guarded = BTreeSet::new();
    let idx = |pol: &str, l: i32| space.index_of(&[pol, &oam_label(l)]);
    for l in window.clone() {
        // R lowers, L raises.
        let from_r = idx("R", l)?;
        if window.contains(&(l - shift)) {
            m[(idx("L", l - shift)?, from_r)] = ONE;
        } else {
            m[(from_r, from_r)] = ONE;
            guarded.insert(from_r);
        }
        let from_l = idx("L", l)?;
        if window.contains(&(l + shift)) {
            m[(idx("R", l + shift)?, from_l)] = ONE;
        } else {
            m[(from_l, from_l)] = ONE;
            guarded.insert(from_l);
        }
    }
    Ok(UnitaryOp::new(space, m, format!("QP(q={q})"))?.with_guard(guarded))
}

/// π/2 cylindrical-lens mode converter on the `{+1, −1}` OAM subspace,
/// modeled as the pole-to-pole rotation `exp(−iπσ_x/2) = −i(|+1⟩⟨−1| + |−1⟩⟨+1|)`.
pub fn mode_converter_pi2(oam: &SpaceDescriptor) -> Result<UnitaryOp> {
    if oam.subsystems().len() != 1 {
        return Err(Error::UnsupportedSubspace(
            "mode converter acts on a single OAM subsystem".into(),
        ));
    }
    let sub = &oam.subsystems()[0];
    let mut labels: Vec<&str> = sub.labels.iter().map(String::as_str).collect();
    labels.sort_unstable();
    if labels != ["+1", "-1"] {
        return Err(Error::UnsupportedSubspace(format!(
            "mode converter needs OAM labels {{+1, -1}}, got {:?}",
            sub.labels
        )));
    }
    let m = CMatrix::from_row_slice(2, 2, &[ZERO, -I, -I, ZERO]);
    UnitaryOp::new(oam.clone(), m, "CL(pi/2)")
}

/// `diag(1, e^{iφ})` on a single two-level subsystem.
pub fn phase_gate(space: &SpaceDescriptor, phi: f64) -> Result<UnitaryOp> {
    if space.subsystems().len() != 1 || space.dim() != 2 {
        return Err(Error::UnsupportedSubspace(
            "phase gate acts on one two-level subsystem".into(),
        ));
    }
    let m = CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, Complex64::from_polar(1.0, phi)]);
    UnitaryOp::new(space.clone(), m, format!("PG({phi})"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, unitarity_deviation};
    use crate::state::Ket;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn phase_gate_flips_relative_sign() {
        let pg = phase_gate(&oam_pair_space("oam"), std::f64::consts::PI).unwrap();
        let h = FRAC_1_SQRT_2;
        let plus = Ket::from_vec(oam_pair_space("oam"), vec![c(h, 0.0), c(h, 0.0)]).unwrap();
        let minus = Ket::from_vec(oam_pair_space("oam"), vec![c(h, 0.0), c(-h, 0.0)]).unwrap();
        assert!(pg
            .apply(&plus)
            .unwrap()
            .approx_eq_up_to_phase(&minus, 1e-15));
        assert!(phase_gate(&sam_space("a").product(&sam_space("b")).unwrap(), 1.0).is_err());
    }

    #[test]
    fn sam_swap_matrix() {
        let u = swap_operator(&SwapSpec::new("sam", "R", "L"), &sam_space("sam")).unwrap();
        assert_eq!(
            *u.matrix(),
            CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
        );
        assert_eq!(u.matrix() * u.matrix(), CMatrix::identity(2, 2));
    }

    #[test]
    fn oam_swap_on_window_fixes_other_labels() {
        let space = oam_window_space("oam", -2..=2).unwrap();
        let u = swap_operator(&SwapSpec::new("oam", "+1", "-1"), &space).unwrap();
        let zero = Ket::basis(&space, &["0"]).unwrap();
        assert_eq!(u.apply(&zero).unwrap(), zero);
        let p = Ket::basis(&space, &["+1"]).unwrap();
        assert_eq!(u.apply(&p).unwrap(), Ket::basis(&space, &["-1"]).unwrap());
    }

    #[test]
    fn swap_unknown_label() {
        let err = swap_operator(&SwapSpec::new("sam", "R", "H"), &sam_space("sam"));
        assert!(matches!(err, Err(Error::UnknownBasisLabel { .. })));
    }

    #[test]
    fn hwp_swap_setting() {
        let hwp = half_wave_plate("sam", HWP_SWAP_ANGLE).unwrap();
        let swap = swap_operator(&SwapSpec::new("sam", "R", "L"), &sam_space("sam")).unwrap();
        assert!(hwp.phase_insensitive_distance(&swap).unwrap() < 1e-12);
        let r = Ket::basis(&sam_space("sam"), &["R"]).unwrap();
        let l = Ket::basis(&sam_space("sam"), &["L"]).unwrap();
        assert!(hwp.apply(&r).unwrap().approx_eq_up_to_phase(&l, 1e-12));
    }

    #[test]
    fn hwp_squares_to_identity_up_to_phase() {
        for angle in [0.0, 0.3, 1.1] {
            let hwp = half_wave_plate("sam", angle).unwrap();
            let sq = hwp.compose(&hwp).unwrap();
            let id = UnitaryOp::identity(&sam_space("sam"));
            assert!(sq.phase_insensitive_distance(&id).unwrap() < 1e-12);
        }
    }

    #[test]
    fn qwp_converts_circular_to_linear() {
        let qwp = quarter_wave_plate("sam", 0.0).unwrap();
        let r = Ket::basis(&sam_space("sam"), &["R"]).unwrap();
        let out = qwp.apply(&r).unwrap();
        // Linear polarizations sit on the equator: equal weight on R and L.
        let a = out.amplitudes();
        assert!((a[0].norm_sqr() - 0.5).abs() < 1e-12);
        assert!((a[1].norm_sqr() - 0.5).abs() < 1e-12);
        let q4 = qwp
            .compose(&qwp)
            .unwrap()
            .compose(&qwp)
            .unwrap()
            .compose(&qwp)
            .unwrap();
        assert!(
            q4.phase_insensitive_distance(&UnitaryOp::identity(&sam_space("sam")))
                .unwrap()
                < 1e-12
        );
    }

    #[test]
    fn qplate_on_horizontal_zero() {
        let qp = q_plate("sam", "oam", 0.5, DEFAULT_OAM_WINDOW).unwrap();
        let h = c(FRAC_1_SQRT_2, 0.0);
        let input = Ket::from_terms(qp.space(), &[(h, &["R", "0"]), (h, &["L", "0"])]).unwrap();
        let out = qp.apply(&input).unwrap();
        let expected =
            Ket::from_terms(qp.space(), &[(h, &["R", "+1"]), (h, &["L", "-1"])]).unwrap();
        assert!(out.approx_eq_up_to_phase(&expected, 1e-12));
        assert!(
            max_abs_diff(
                &(qp.dagger().matrix() * qp.matrix()),
                &CMatrix::identity(10, 10)
            ) < 1e-12
        );
    }

    #[test]
    fn qplate_overflow_is_an_error() {
        let qp = q_plate("sam", "oam", 0.5, DEFAULT_OAM_WINDOW).unwrap();
        let edge = Ket::basis(qp.space(), &["R", "-2"]).unwrap();
        assert!(matches!(qp.apply(&edge), Err(Error::OamOverflow(_))));
        let edge = Ket::basis(qp.space(), &["L", "+2"]).unwrap();
        assert!(matches!(qp.apply(&edge), Err(Error::OamOverflow(_))));
    }

    #[test]
    fn qplate_rejects_bad_charge() {
        assert!(q_plate("sam", "oam", 0.3, DEFAULT_OAM_WINDOW).is_err());
        assert!(q_plate("sam", "oam", 0.0, DEFAULT_OAM_WINDOW).is_err());
    }

    #[test]
    fn mode_converter_is_swap_up_to_phase() {
        let space = oam_pair_space("oam");
        let cl = mode_converter_pi2(&space).unwrap();
        let swap = swap_operator(&SwapSpec::new("oam", "+1", "-1"), &space).unwrap();
        assert!(cl.phase_insensitive_distance(&swap).unwrap() < 1e-15);
        let p = Ket::basis(&space, &["+1"]).unwrap();
        let m = Ket::basis(&space, &["-1"]).unwrap();
        assert!(cl.apply(&p).unwrap().approx_eq_up_to_phase(&m, 1e-15));
        let sq = cl.compose(&cl).unwrap();
        assert!(
            sq.phase_insensitive_distance(&UnitaryOp::identity(&space))
                .unwrap()
                < 1e-15
        );
        assert!(unitarity_deviation(cl.matrix()) < 1e-15);
    }

    #[test]
    fn mode_converter_rejects_window() {
        let space = oam_window_space("oam", -1..=1).unwrap();
        assert!(matches!(
            mode_converter_pi2(&space),
            Err(Error::UnsupportedSubspace(_))
        ));
    }
}
