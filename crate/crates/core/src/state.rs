//! Kets and density matrices over labeled composite spaces.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, ONE};
use crate::space::SpaceDescriptor;

/// Normalization tolerance on Σ|a_k|².
pub const NORM_TOL: f64 = 1e-12;
/// Hermiticity and trace tolerance for density matrices.
pub const DENSITY_TOL: f64 = 1e-10;
/// Smallest eigenvalue a validated density matrix may have.
pub const MIN_EIGENVALUE: f64 = -1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct Ket {
    space: SpaceDescriptor,
    amplitudes: CVector,
}

impl Ket {
    pub fn new(space: SpaceDescriptor, amplitudes: CVector) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::SpaceMismatch(format!(
                "{} amplitudes for a space of dimension {}",
                amplitudes.len(),
                space.dim()
            )));
        }
        Ok(Ket { space, amplitudes })
    }

    pub fn from_vec(space: SpaceDescriptor, amplitudes: Vec<Complex64>) -> Result<Self> {
        Self::new(space, CVector::from_vec(amplitudes))
    }

    /// Basis ket with one label per subsystem.
    pub fn basis(space: &SpaceDescriptor, labels: &[&str]) -> Result<Self> {
        let index = space.index_of(labels)?;
        let mut amplitudes = CVector::zeros(space.dim());
        amplitudes[index] = ONE;
        Ok(Ket {
            space: space.clone(),
            amplitudes,
        })
    }

    /// Linear combination of basis kets, e.g. `[(a, &["R", "+1"]), (b, &["L", "-1"])]`.
    pub fn from_terms(space: &SpaceDescriptor, terms: &[(Complex64, &[&str])]) -> Result<Self> {
        let mut amplitudes = CVector::zeros(space.dim());
        for (amp, labels) in terms {
            amplitudes[space.index_of(labels)?] += amp;
        }
        Ok(Ket {
            space: space.clone(),
            amplitudes,
        })
    }

    pub fn space(&self) -> &SpaceDescriptor {
        &self.space
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn amplitude(&self, labels: &[&str]) -> Result<Complex64> {
        Ok(self.amplitudes[self.space.index_of(labels)?])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= NORM_TOL
    }

    pub fn normalized(&self) -> Result<Ket> {
        let n = self.norm();
        if n <= NORM_TOL {
            return Err(Error::NotNormalized(0.0));
        }
        Ok(self.scaled(Complex64::new(1.0 / n, 0.0)))
    }

    pub fn scaled(&self, factor: Complex64) -> Ket {
        Ket {
            space: self.space.clone(),
            amplitudes: self.amplitudes.map(|a| a * factor),
        }
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &Ket) -> Result<Complex64> {
        self.require_same_space(other)?;
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// min over φ of ‖self − e^{iφ} other‖.
    pub fn phase_distance(&self, other: &Ket) -> Result<f64> {
        let overlap = other.inner(self)?;
        let phase = if overlap.norm() > 0.0 {
            overlap / overlap.norm()
        } else {
            ONE
        };
        Ok((&self.amplitudes - other.amplitudes.map(|a| a * phase)).norm())
    }

    pub fn approx_eq_up_to_phase(&self, other: &Ket, tol: f64) -> bool {
        self.phase_distance(other)
            .map(|d| d <= tol)
            .unwrap_or(false)
    }

    pub(crate) fn require_same_space(&self, other: &Ket) -> Result<()> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch(format!(
                "{:?} vs {:?}",
                self.space.ids(),
                other.space.ids()
            )));
        }
        Ok(())
    }

    /// Reorders subsystems; `order` must be a permutation of the ids.
    pub fn permute(&self, order: &[&str]) -> Result<Ket> {
        if order.len() != self.space.subsystems().len() {
            return Err(Error::SpaceMismatch(format!(
                "permutation {:?} does not cover {:?}",
                order,
                self.space.ids()
            )));
        }
        let target = self.space.select(order)?;
        let positions = order
            .iter()
            .map(|id| self.space.position(id))
            .collect::<Result<Vec<_>>>()?;
        let mut amplitudes = CVector::zeros(self.amplitudes.len());
        for (i, a) in self.amplitudes.iter().enumerate() {
            let digits = self.space.unflatten(i);
            let permuted: Vec<usize> = positions.iter().map(|&p| digits[p]).collect();
            amplitudes[target.flatten(&permuted)] = *a;
        }
        Ok(Ket {
            space: target,
            amplitudes,
        })
    }

    /// Restricts one subsystem to a subset of its labels. Amplitude outside
    /// the subset is an error, never dropped.
    pub fn restrict(&self, subsystem: &str, labels: &[&str]) -> Result<Ket> {
        let pos = self.space.position(subsystem)?;
        let sub = &self.space.subsystems()[pos];
        let keep = labels
            .iter()
            .map(|l| sub.label_index(l))
            .collect::<Result<Vec<_>>>()?;
        let target = self
            .space
            .with_labels(subsystem, labels.iter().map(|l| l.to_string()).collect())?;
        let mut amplitudes = CVector::zeros(target.dim());
        let mut lost = 0.0;
        for (i, a) in self.amplitudes.iter().enumerate() {
            let mut digits = self.space.unflatten(i);
            match keep.iter().position(|&k| k == digits[pos]) {
                Some(new) => {
                    digits[pos] = new;
                    amplitudes[target.flatten(&digits)] = *a;
                }
                None => lost += a.norm_sqr(),
            }
        }
        if lost > NORM_TOL {
            return Err(Error::UnsupportedSubspace(format!(
                "restricting `{subsystem}` to {labels:?} discards weight {lost:e}"
            )));
        }
        Ok(Ket {
            space: target,
            amplitudes,
        })
    }

    /// Splits off a subsystem that is in a product state with the rest,
    /// returning `(factor, remainder)` with `self = factor ⊗ remainder` up to
    /// subsystem order. The factor carries the canonical phase (first nonzero
    /// amplitude real positive); the remainder carries everything else.
    pub fn factor_out(&self, subsystem: &str) -> Result<(Ket, Ket)> {
        let pos = self.space.position(subsystem)?;
        let sub_space = self.space.select(&[subsystem])?;
        let rest_space = self.space.without(subsystem)?;
        let d_sub = sub_space.dim();
        let d_rest = rest_space.dim();
        let mut m = CMatrix::zeros(d_sub, d_rest);
        for (i, a) in self.amplitudes.iter().enumerate() {
            let mut digits = self.space.unflatten(i);
            let s = digits.remove(pos);
            m[(s, rest_space.flatten(&digits))] = *a;
        }
        // Pick the row of largest weight as the reference for the remainder.
        let (row, _) =
            (0..d_sub)
                .map(|r| (r, m.row(r).norm_squared()))
                .fold(
                    (0, -1.0),
                    |best, cur| if cur.1 > best.1 { cur } else { best },
                );
        let rest_vec: CVector = m.row(row).transpose();
        let rest_norm = rest_vec.norm();
        if rest_norm <= NORM_TOL {
            return Err(Error::NotNormalized(0.0));
        }
        let rest_unit = rest_vec.unscale(rest_norm);
        let factor_vec: CVector = &m * rest_unit.conjugate();
        let residual = &m - &factor_vec * rest_unit.transpose();
        let residual_norm = residual.norm();
        if residual_norm > 1e-10 {
            return Err(Error::UnsupportedSubspace(format!(
                "subsystem `{subsystem}` is entangled with the rest (residual {residual_norm:e})"
            )));
        }
        let lead = factor_vec
            .iter()
            .find(|a| a.norm() > 1e-12)
            .copied()
            .unwrap_or(ONE);
        let phase = lead / lead.norm();
        let fnorm = factor_vec.norm();
        let factor = factor_vec.map(|a| a / (phase * fnorm));
        let remainder = rest_unit.map(|a| a * phase * fnorm);
        Ok((
            Ket {
                space: sub_space,
                amplitudes: factor,
            },
            Ket {
                space: rest_space,
                amplitudes: remainder,
            },
        ))
    }
}

/// a ⊗ b; the subsystem lists are concatenated.
pub fn tensor(a: &Ket, b: &Ket) -> Result<Ket> {
    let space = a.space.product(&b.space)?;
    Ok(Ket {
        space,
        amplitudes: linalg::kron_vec(&a.amplitudes, &b.amplitudes),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    space: SpaceDescriptor,
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Validated physical state: Hermitian, unit trace, eigenvalues ≥ −1e−8.
    pub fn new(space: SpaceDescriptor, matrix: CMatrix) -> Result<Self> {
        let rho = Self::from_estimate(space, matrix)?;
        let min = rho.min_eigenvalue();
        if min < MIN_EIGENVALUE {
            return Err(Error::InvalidDensity(format!(
                "minimum eigenvalue {min:e} below {MIN_EIGENVALUE:e}"
            )));
        }
        Ok(rho)
    }

    /// Hermitian, unit-trace estimate that may carry small negative
    /// eigenvalues (raw linear-inversion output).
    pub fn from_estimate(space: SpaceDescriptor, matrix: CMatrix) -> Result<Self> {
        Self::check_shape_and_hermiticity(&space, &matrix, DENSITY_TOL)?;
        let tr = linalg::trace(&matrix);
        if (tr - ONE).norm() > DENSITY_TOL {
            return Err(Error::InvalidDensity(format!("trace {tr} differs from 1")));
        }
        Ok(DensityMatrix { space, matrix })
    }

    pub(crate) fn check_shape_and_hermiticity(
        space: &SpaceDescriptor,
        matrix: &CMatrix,
        tol: f64,
    ) -> Result<()> {
        let d = space.dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::SpaceMismatch(format!(
                "{}x{} matrix for a space of dimension {d}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let dev = linalg::hermitian_deviation(matrix);
        if dev > tol {
            return Err(Error::InvalidDensity(format!(
                "not Hermitian (deviation {dev:e})"
            )));
        }
        Ok(())
    }

    pub fn maximally_mixed(space: &SpaceDescriptor) -> Self {
        let d = space.dim();
        DensityMatrix {
            space: space.clone(),
            matrix: CMatrix::identity(d, d).unscale(d as f64),
        }
    }

    pub fn space(&self) -> &SpaceDescriptor {
        &self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::hermitian_eigenvalues(&self.matrix)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    pub fn trace(&self) -> Complex64 {
        linalg::trace(&self.matrix)
    }

    pub fn purity(&self) -> f64 {
        // Tr ρ² = Σ |ρ_ij|² for Hermitian ρ.
        self.matrix.iter().map(|v| v.norm_sqr()).sum()
    }

    /// Clips negative eigenvalues to zero and renormalizes.
    pub fn clipped(&self) -> DensityMatrix {
        let m = linalg::hermitian_map(&self.matrix, |v| v.max(0.0));
        let tr = linalg::trace(&m).re;
        let matrix = if tr > 0.0 {
            linalg::hermitize(&m).unscale(tr)
        } else {
            DensityMatrix::maximally_mixed(&self.space).matrix
        };
        DensityMatrix {
            space: self.space.clone(),
            matrix,
        }
    }

    /// Reduced state on `keep` (ordered as in the parent space).
    pub fn partial_trace(&self, keep: &[&str]) -> Result<DensityMatrix> {
        for id in keep {
            self.space.position(id)?;
        }
        let n = self.space.subsystems().len();
        let kept: Vec<usize> = (0..n)
            .filter(|&p| keep.contains(&self.space.ids()[p]))
            .collect();
        if kept.is_empty() || kept.len() == n {
            return Err(Error::InvalidSplit(
                "partial trace must keep a nonempty proper subset".into(),
            ));
        }
        let kept_ids: Vec<&str> = kept.iter().map(|&p| self.space.ids()[p]).collect();
        let reduced = self.space.select(&kept_ids)?;
        let traced: Vec<usize> = (0..n).filter(|p| !kept.contains(p)).collect();
        let d = self.space.dim();
        let mut out = CMatrix::zeros(reduced.dim(), reduced.dim());
        let digits: Vec<Vec<usize>> = (0..d).map(|i| self.space.unflatten(i)).collect();
        let reduced_index: Vec<usize> = digits
            .iter()
            .map(|dg| reduced.flatten(&kept.iter().map(|&p| dg[p]).collect::<Vec<_>>()))
            .collect();
        for i in 0..d {
            for j in 0..d {
                if traced.iter().all(|&p| digits[i][p] == digits[j][p]) {
                    out[(reduced_index[i], reduced_index[j])] += self.matrix[(i, j)];
                }
            }
        }
        Ok(DensityMatrix {
            space: reduced,
            matrix: out,
        })
    }
}

/// |ψ⟩⟨ψ| for a normalized ket.
pub fn density_of(psi: &Ket) -> Result<DensityMatrix> {
    if !psi.is_normalized() {
        return Err(Error::NotNormalized(psi.norm_sqr()));
    }
    let v = psi.amplitudes();
    Ok(DensityMatrix {
        space: psi.space().clone(),
        matrix: v * v.adjoint(),
    })
}

pub fn partial_trace(rho: &DensityMatrix, keep: &[&str]) -> Result<DensityMatrix> {
    rho.partial_trace(keep)
}

pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.purity()
}

/// JSON form: basis metadata plus nested `[re, im]` pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensityMatrixJson {
    pub schema_version: u32,
    pub space: SpaceDescriptor,
    pub matrix: Vec<Vec<[f64; 2]>>,
}

/// Loaders reject input whose Hermiticity deviation exceeds this.
pub const LOAD_HERMITIAN_TOL: f64 = 1e-8;

impl DensityMatrix {
    pub fn to_json(&self) -> DensityMatrixJson {
        let d = self.space.dim();
        DensityMatrixJson {
            schema_version: 1,
            space: self.space.clone(),
            matrix: (0..d)
                .map(|i| {
                    (0..d)
                        .map(|j| [self.matrix[(i, j)].re, self.matrix[(i, j)].im])
                        .collect()
                })
                .collect(),
        }
    }

    /// Loads a serialized estimate. Entries are symmetrized after the
    /// Hermiticity check so that round-off in the file is tolerated.
    pub fn from_json(doc: &DensityMatrixJson) -> Result<DensityMatrix> {
        let d = doc.space.dim();
        if doc.matrix.len() != d || doc.matrix.iter().any(|row| row.len() != d) {
            return Err(Error::SpaceMismatch(format!(
                "matrix shape does not match dimension {d}"
            )));
        }
        let matrix = CMatrix::from_fn(d, d, |i, j| {
            Complex64::new(doc.matrix[i][j][0], doc.matrix[i][j][1])
        });
        Self::check_shape_and_hermiticity(&doc.space, &matrix, LOAD_HERMITIAN_TOL)?;
        let matrix = linalg::hermitize(&matrix);
        let tr = linalg::trace(&matrix);
        if (tr - ONE).norm() > DENSITY_TOL.max(LOAD_HERMITIAN_TOL) {
            return Err(Error::InvalidDensity(format!("trace {tr} differs from 1")));
        }
        Ok(DensityMatrix {
            space: doc.space.clone(),
            matrix,
        })
    }
}
