//! Preparation of the nonlocal (two-photon) and local (single-photon)
//! SAM–OAM states, and the four swap configurations applied to them.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::c;
use crate::operator::UnitaryOp;
use crate::optics::{
    half_wave_plate, mode_converter_pi2, oam_pair_space, oam_window_space, q_plate, sam_space,
    swap_operator, SwapSpec, DEFAULT_OAM_WINDOW, HWP_SWAP_ANGLE, OAM_PAIR_LABELS,
};
use crate::space::SpaceDescriptor;
use crate::state::{tensor, Ket, NORM_TOL};

/// Subsystem ids of the two-photon pipeline.
pub mod nonlocal_ids {
    pub const SAM_IDLER: &str = "sam_i";
    pub const OAM_SIGNAL: &str = "oam_s";
    pub const SAM_SIGNAL: &str = "sam_s";
    pub const OAM_IDLER: &str = "oam_i";
}

/// Subsystem ids of the single-photon pipeline.
pub mod local_ids {
    pub const SAM: &str = "sam";
    pub const OAM: &str = "oam";
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Nonlocal,
    Local,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 2] = [ExperimentKind::Nonlocal, ExperimentKind::Local];

    pub fn sam_id(self) -> &'static str {
        match self {
            ExperimentKind::Nonlocal => nonlocal_ids::SAM_SIGNAL,
            ExperimentKind::Local => local_ids::SAM,
        }
    }

    pub fn oam_id(self) -> &'static str {
        match self {
            ExperimentKind::Nonlocal => nonlocal_ids::OAM_IDLER,
            ExperimentKind::Local => local_ids::OAM,
        }
    }

    /// Nonlocal: the system is the OAM degree of freedom; local: SAM.
    pub fn system_id(self) -> &'static str {
        match self {
            ExperimentKind::Nonlocal => self.oam_id(),
            ExperimentKind::Local => self.sam_id(),
        }
    }

    pub fn environment_id(self) -> &'static str {
        match self {
            ExperimentKind::Nonlocal => self.sam_id(),
            ExperimentKind::Local => self.oam_id(),
        }
    }

    /// The SAM ⊗ OAM space every prepared state lives on.
    pub fn space(self) -> SpaceDescriptor {
        sam_space(self.sam_id())
            .product(&oam_pair_space(self.oam_id()))
            .expect("distinct ids")
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Nonlocal => "nonlocal",
            ExperimentKind::Local => "local",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nonlocal" => Ok(ExperimentKind::Nonlocal),
            "local" => Ok(ExperimentKind::Local),
            other => Err(Error::Parse(format!("unknown experiment `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SwapConfig {
    pub apply_system_swap: bool,
    pub apply_environment_swap: bool,
}

impl SwapConfig {
    pub const ORIGINAL: SwapConfig = SwapConfig::new(false, false);
    pub const SYSTEM_SWAPPED: SwapConfig = SwapConfig::new(true, false);
    pub const ENVIRONMENT_SWAPPED: SwapConfig = SwapConfig::new(false, true);
    pub const TWICE_SWAPPED: SwapConfig = SwapConfig::new(true, true);
    pub const ALL: [SwapConfig; 4] = [
        Self::ORIGINAL,
        Self::SYSTEM_SWAPPED,
        Self::ENVIRONMENT_SWAPPED,
        Self::TWICE_SWAPPED,
    ];

    pub const fn new(apply_system_swap: bool, apply_environment_swap: bool) -> Self {
        SwapConfig {
            apply_system_swap,
            apply_environment_swap,
        }
    }

    pub fn as_str(self) -> &'static str {
        match (self.apply_system_swap, self.apply_environment_swap) {
            (false, false) => "original",
            (true, false) => "system_swapped",
            (false, true) => "environment_swapped",
            (true, true) => "twice_swapped",
        }
    }
}

impl fmt::Display for SwapConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SwapConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SwapConfig::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown swap configuration `{s}`")))
    }
}

#[derive(Debug, Clone)]
pub struct PostSelectionResult {
    pub ket: Ket,
    pub success_probability: f64,
}

/// `(|+1⟩_s|−1⟩_i + |−1⟩_s|+1⟩_i)/√2 ⊗ |H⟩_s|H⟩_i` on
/// `sam_i ⊗ oam_s ⊗ sam_s ⊗ oam_i`, with `oam_s` over the default window.
pub fn spdc_state() -> Result<Ket> {
    use nonlocal_ids::*;
    let h = c(FRAC_1_SQRT_2, 0.0);
    let horizontal = |id: &str| Ket::from_terms(&sam_space(id), &[(h, &["R"]), (h, &["L"])]);
    let oam_space =
        oam_window_space(OAM_SIGNAL, DEFAULT_OAM_WINDOW)?.product(&oam_pair_space(OAM_IDLER))?;
    let oam_pair = Ket::from_terms(&oam_space, &[(h, &["+1", "-1"]), (h, &["-1", "+1"])])?;
    let joint = tensor(
        &oam_pair,
        &tensor(&horizontal(SAM_SIGNAL)?, &horizontal(SAM_IDLER)?)?,
    )?;
    joint.permute(&[SAM_IDLER, OAM_SIGNAL, SAM_SIGNAL, OAM_IDLER])
}

/// Projects `subsystem` onto `label`, removes it, and renormalizes.
pub fn post_select(psi: &Ket, subsystem: &str, label: &str) -> Result<PostSelectionResult> {
    let space = psi.space();
    let pos = space.position(subsystem)?;
    let target = space.subsystems()[pos].label_index(label)?;
    let rest = space.without(subsystem)?;
    let mut amps = vec![c(0.0, 0.0); rest.dim()];
    for (i, a) in psi.amplitudes().iter().enumerate() {
        let mut digits = space.unflatten(i);
        if digits.remove(pos) == target {
            amps[rest.flatten(&digits)] = *a;
        }
    }
    let projected = Ket::from_vec(rest, amps)?;
    let p = projected.norm_sqr();
    if p <= NORM_TOL {
        return Err(Error::EmptyPostSelection {
            subsystem: subsystem.into(),
            label: label.into(),
        });
    }
    Ok(PostSelectionResult {
        ket: projected.normalized()?,
        success_probability: p,
    })
}

/// Intermediate states of the two-photon preparation.
#[derive(Debug, Clone)]
pub struct NonlocalTrace {
    pub spdc: Ket,
    pub after_q_plate: Ket,
    pub post_selection: PostSelectionResult,
    pub prepared: Ket,
}

pub fn prepare_nonlocal_traced() -> Result<NonlocalTrace> {
    use nonlocal_ids::*;
    let spdc = spdc_state()?;
    let qp = q_plate(SAM_SIGNAL, OAM_SIGNAL, 0.5, DEFAULT_OAM_WINDOW)?;
    let after_q_plate = qp.apply(&spdc)?;
    let post_selection = post_select(&after_q_plate, OAM_SIGNAL, "0")?;
    // The idler polarization stays |H⟩ and factors out exactly.
    let (_, rest) = post_selection.ket.factor_out(SAM_IDLER)?;
    let prepared = rest
        .permute(&[SAM_SIGNAL, OAM_IDLER])?
        .restrict(OAM_IDLER, &OAM_PAIR_LABELS)?;
    Ok(NonlocalTrace {
        spdc,
        after_q_plate,
        post_selection,
        prepared,
    })
}

/// Returns the Bell-form SAM ⊗ OAM ket `(|R,+1⟩ + |L,−1⟩)/√2`, obtained by
/// running the experiment's preparation chain.
pub fn prepare(kind: ExperimentKind) -> Result<Ket> {
    match kind {
        ExperimentKind::Nonlocal => Ok(prepare_nonlocal_traced()?.prepared),
        ExperimentKind::Local => {
            use local_ids::*;
            let h = c(FRAC_1_SQRT_2, 0.0);
            let space = sam_space(SAM).product(&oam_window_space(OAM, DEFAULT_OAM_WINDOW)?)?;
            let input = Ket::from_terms(&space, &[(h, &["R", "0"]), (h, &["L", "0"])])?;
            let qp = q_plate(SAM, OAM, 0.5, DEFAULT_OAM_WINDOW)?;
            qp.apply(&input)?.restrict(OAM, &OAM_PAIR_LABELS)
        }
    }
}

/// Physical realizations of the two swaps for one experiment.
#[derive(Debug, Clone)]
pub struct SwapOperators {
    pub system: UnitaryOp,
    pub environment: UnitaryOp,
}

impl SwapOperators {
    /// SAM swaps are half-wave plates in both experiments. The OAM swap is a
    /// mirror-basis label exchange in the nonlocal experiment and the π/2
    /// mode converter in the local one.
    pub fn for_kind(kind: ExperimentKind) -> Result<Self> {
        let sam = half_wave_plate(kind.sam_id(), HWP_SWAP_ANGLE)?;
        let oam_space = oam_pair_space(kind.oam_id());
        let oam = match kind {
            ExperimentKind::Nonlocal => {
                swap_operator(&SwapSpec::new(kind.oam_id(), "+1", "-1"), &oam_space)?
            }
            ExperimentKind::Local => mode_converter_pi2(&oam_space)?,
        };
        let (system, environment) = match kind {
            ExperimentKind::Nonlocal => (oam, sam),
            ExperimentKind::Local => (sam, oam),
        };
        Ok(SwapOperators {
            system,
            environment,
        })
    }

    pub fn apply(&self, psi: &Ket, config: SwapConfig) -> Result<Ket> {
        let mut out = psi.clone();
        if config.apply_system_swap {
            out = self.system.apply(&out)?;
        }
        if config.apply_environment_swap {
            out = self.environment.apply(&out)?;
        }
        Ok(out)
    }
}

pub fn apply_swap_config(psi: &Ket, kind: ExperimentKind, config: SwapConfig) -> Result<Ket> {
    if psi.space() != &kind.space() {
        return Err(Error::SpaceMismatch(format!(
            "expected {:?}, got {:?}",
            kind.space().ids(),
            psi.space().ids()
        )));
    }
    SwapOperators::for_kind(kind)?.apply(psi, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::density_of;

    fn bell(kind: ExperimentKind) -> Ket {
        let h = c(FRAC_1_SQRT_2, 0.0);
        Ket::from_terms(&kind.space(), &[(h, &["R", "+1"]), (h, &["L", "-1"])]).unwrap()
    }

    #[test]
    fn local_preparation() {
        let psi = prepare(ExperimentKind::Local).unwrap();
        assert!(psi.approx_eq_up_to_phase(&bell(ExperimentKind::Local), 1e-12));
    }

    #[test]
    fn nonlocal_preparation() {
        let psi = prepare(ExperimentKind::Nonlocal).unwrap();
        assert_eq!(psi.space().ids(), vec!["sam_s", "oam_i"]);
        assert!(psi.approx_eq_up_to_phase(&bell(ExperimentKind::Nonlocal), 1e-12));
    }

    #[test]
    fn spdc_properties() {
        let psi = spdc_state().unwrap();
        assert!((psi.norm() - 1.0).abs() < 1e-12);
        let red = density_of(&psi).unwrap().partial_trace(&["oam_s"]).unwrap();
        // ±1 populated equally, coherence zero.
        let m = red.matrix();
        let p = red.space().index_of(&["+1"]).unwrap();
        let n = red.space().index_of(&["-1"]).unwrap();
        assert!((m[(p, p)].re - 0.5).abs() < 1e-12 && (m[(n, n)].re - 0.5).abs() < 1e-12);
        assert!(m[(p, n)].norm() < 1e-12);
    }

    #[test]
    fn post_selection_probability() {
        let t = prepare_nonlocal_traced().unwrap();
        assert!((t.post_selection.success_probability - 0.5).abs() < 1e-12);
        let k = &t.post_selection.ket;
        assert!(k.is_normalized());
    }

    #[test]
    fn post_selection_of_product() {
        let a = Ket::basis(&sam_space("a"), &["L"]).unwrap();
        let b = Ket::basis(&oam_pair_space("b"), &["-1"]).unwrap();
        let r = post_select(&tensor(&a, &b).unwrap(), "b", "-1").unwrap();
        assert_eq!(r.ket, a);
        assert!((r.success_probability - 1.0).abs() < 1e-15);
        assert!(matches!(
            post_select(&tensor(&a, &b).unwrap(), "b", "+1"),
            Err(Error::EmptyPostSelection { .. })
        ));
    }

    #[test]
    fn swap_configs() {
        for kind in ExperimentKind::ALL {
            let psi = prepare(kind).unwrap();
            assert_eq!(
                apply_swap_config(&psi, kind, SwapConfig::ORIGINAL).unwrap(),
                psi
            );
            let twice = apply_swap_config(&psi, kind, SwapConfig::TWICE_SWAPPED).unwrap();
            assert!(twice.approx_eq_up_to_phase(&psi, 1e-12));
        }
        let psi = prepare(ExperimentKind::Local).unwrap();
        let s = apply_swap_config(&psi, ExperimentKind::Local, SwapConfig::SYSTEM_SWAPPED).unwrap();
        let h = c(FRAC_1_SQRT_2, 0.0);
        let expected =
            Ket::from_terms(psi.space(), &[(h, &["L", "+1"]), (h, &["R", "-1"])]).unwrap();
        assert!(s.approx_eq_up_to_phase(&expected, 1e-12));
    }

    #[test]
    fn swap_config_space_check() {
        let psi = prepare(ExperimentKind::Local).unwrap();
        assert!(apply_swap_config(&psi, ExperimentKind::Nonlocal, SwapConfig::ORIGINAL).is_err());
    }

    #[test]
    fn names_round_trip() {
        for c in SwapConfig::ALL {
            assert_eq!(c.as_str().parse::<SwapConfig>().unwrap(), c);
        }
        for k in ExperimentKind::ALL {
            assert_eq!(k.as_str().parse::<ExperimentKind>().unwrap(), k);
        }
    }
}
