//! Schmidt decomposition of pure bipartite states.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector};
use crate::space::{BipartiteSplit, SpaceDescriptor};
use crate::state::{tensor, Ket};

/// Coefficients below this are reported as exactly zero.
pub const ZERO_COEFFICIENT: f64 = 1e-12;
const DEGENERACY_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct SchmidtDecomposition {
    pub split: BipartiteSplit,
    /// Nonincreasing, nonnegative.
    pub coefficients: Vec<f64>,
    pub left_vectors: Vec<Ket>,
    pub right_vectors: Vec<Ket>,
    original_order: Vec<String>,
}

impl SchmidtDecomposition {
    /// Number of nonzero coefficients.
    pub fn rank(&self) -> usize {
        self.coefficients.iter().filter(|&&c| c > 0.0).count()
    }

    /// Σ c_i |l_i⟩⊗|r_i⟩ in the subsystem order of the decomposed ket.
    pub fn reconstruct(&self) -> Result<Ket> {
        let order: Vec<&str> = self.original_order.iter().map(String::as_str).collect();
        let mut acc: Option<CVector> = None;
        let mut space = None;
        for ((c, l), r) in self
            .coefficients
            .iter()
            .zip(&self.left_vectors)
            .zip(&self.right_vectors)
        {
            let term = tensor(l, r)?.scaled(num_complex::Complex64::new(*c, 0.0));
            space.get_or_insert_with(|| term.space().clone());
            acc = Some(match acc {
                Some(v) => v + term.amplitudes(),
                None => term.amplitudes().clone(),
            });
        }
        let space = space.ok_or_else(|| Error::InvalidSplit("empty decomposition".into()))?;
        Ket::new(space, acc.expect("nonempty"))?.permute(&order)
    }
}

/// Decomposes a normalized ket across `split`.
///
/// Phases are fixed so that every coefficient is real and nonnegative and the
/// first nonzero amplitude of each left vector is real positive. Degenerate
/// coefficient groups are ordered by the lexicographic signature of their
/// left vectors.
pub fn schmidt_decompose(psi: &Ket, split: &BipartiteSplit) -> Result<SchmidtDecomposition> {
    if !psi.is_normalized() {
        return Err(Error::NotNormalized(psi.norm_sqr()));
    }
    let left_ids = split.left();
    let right_ids = split.right();
    let mut order = left_ids.clone();
    order.extend(right_ids.iter().copied());
    let arranged = psi.permute(&order)?;
    let left_space: SpaceDescriptor = psi.space().select(&left_ids)?;
    let right_space: SpaceDescriptor = psi.space().select(&right_ids)?;
    let (dl, dr) = (left_space.dim(), right_space.dim());
    let m = CMatrix::from_row_slice(dl, dr, arranged.amplitudes().as_slice());

    let svd = m.svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V†");
    let k = dl.min(dr);

    let mut triples: Vec<(f64, CVector, CVector)> = (0..k)
        .map(|i| {
            let sigma = svd.singular_values[i];
            let mut l: CVector = u.column(i).into_owned();
            let mut r: CVector = v_t.row(i).transpose();
            if let Some(lead) = l.iter().find(|a| a.norm() > 1e-12).copied() {
                let phase = lead / lead.norm();
                l = l.map(|a| a / phase);
                r = r.map(|a| a * phase);
            }
            let sigma = if sigma < ZERO_COEFFICIENT { 0.0 } else { sigma };
            (sigma, l, r)
        })
        .collect();

    triples.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut start = 0;
    while start < triples.len() {
        let mut end = start + 1;
        while end < triples.len() && (triples[start].0 - triples[end].0).abs() <= DEGENERACY_TOL {
            end += 1;
        }
        triples[start..end].sort_by(|a, b| signature_cmp(&a.1, &b.1));
        // Keep the list nonincreasing after reordering a degenerate group.
        let mean = triples[start..end].iter().map(|t| t.0).sum::<f64>() / (end - start) as f64;
        for t in &mut triples[start..end] {
            t.0 = mean;
        }
        start = end;
    }

    let mut coefficients = Vec::with_capacity(k);
    let mut left_vectors = Vec::with_capacity(k);
    let mut right_vectors = Vec::with_capacity(k);
    for (sigma, l, r) in triples {
        coefficients.push(sigma);
        left_vectors.push(Ket::new(left_space.clone(), l)?);
        right_vectors.push(Ket::new(right_space.clone(), r)?);
    }
    Ok(SchmidtDecomposition {
        split: split.clone(),
        coefficients,
        left_vectors,
        right_vectors,
        original_order: psi.space().ids().into_iter().map(String::from).collect(),
    })
}

fn signature_cmp(a: &CVector, b: &CVector) -> Ordering {
    let round = |x: f64| (x * 1e9).round() as i64;
    for (x, y) in a.iter().zip(b.iter()) {
        let ord = round(y.re)
            .cmp(&round(x.re))
            .then(round(y.im).cmp(&round(x.im)));
        if ord != Ordering::Equal {
            return ord;
        }
    }
    Ordering::Equal
}
