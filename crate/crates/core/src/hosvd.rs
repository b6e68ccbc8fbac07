//! Mode unfoldings, higher-order SVD and singular-spectra fingerprints.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, Matrix3, Vector3};

use crate::bloch::{pow3, CorrTensor, Subset, TensorFamily};
use crate::error::{Error, Result};

/// Thresholds used to group singular values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumTolerances {
    /// Values closer than this (absolute) share a degeneracy block.
    pub degeneracy: f64,
    /// Values below this form the zero block.
    pub zero: f64,
}

impl Default for SpectrumTolerances {
    fn default() -> Self {
        SpectrumTolerances {
            degeneracy: 1e-8,
            zero: 1e-10,
        }
    }
}

/// One maximal run of (near-)equal singular values of a mode, as zero-based
/// positions into the descending spectrum.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub positions: Vec<usize>,
    pub zero: bool,
}

impl Block {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// Partition a descending triple into degeneracy blocks.
pub fn spectrum_blocks(spectrum: &[f64; 3], tol: &SpectrumTolerances) -> Vec<Block> {
    let mut blocks: Vec<Block> = Vec::new();
    for (i, &s) in spectrum.iter().enumerate() {
        let zero = s < tol.zero;
        match blocks.last_mut() {
            Some(b)
                if (b.zero && zero)
                    || (!b.zero && !zero && (spectrum[b.positions[b.len() - 1]] - s).abs() <= tol.degeneracy) =>
            {
                b.positions.push(i)
            }
            _ => blocks.push(Block {
                positions: vec![i],
                zero,
            }),
        }
    }
    blocks
}

/// HOSVD of one correlation tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct CoreDecomposition {
    pub subset: Subset,
    /// Orthogonal factor `U^(n)` per mode; columns are left singular vectors.
    pub mode_factors: Vec<Matrix3<f64>>,
    /// Descending singular values per mode, zero-padded to three.
    pub mode_spectra: Vec<[f64; 3]>,
    pub core: CorrTensor,
}

impl CoreDecomposition {
    /// `(U^(1) x ... x U^(M)) core`.
    pub fn reassemble(&self) -> CorrTensor {
        self.core.transform(&self.mode_factors)
    }
}

/// Mode-`mode` unfolding (1-based): row `i` collects entries with `a_mode = i`,
/// columns run over the remaining modes in increasing order, earliest fastest.
pub fn unfold(t: &CorrTensor, mode: usize) -> Result<DMatrix<f64>> {
    let order = t.order();
    if mode == 0 || mode > order {
        return Err(Error::ModeOutOfRange { mode, order });
    }
    let k = mode - 1;
    let cols = pow3(order - 1);
    let mut m = DMatrix::zeros(3, cols);
    for (off, &v) in t.data().iter().enumerate() {
        let (row, col) = split_offset(off, k);
        m[(row, col)] = v;
    }
    Ok(m)
}

/// Inverse of [`unfold`].
pub fn fold(m: &DMatrix<f64>, mode: usize, subset: Subset) -> Result<CorrTensor> {
    let order = subset.len();
    if mode == 0 || mode > order {
        return Err(Error::ModeOutOfRange { mode, order });
    }
    if m.nrows() != 3 || m.ncols() != pow3(order - 1) {
        return Err(Error::ShapeMismatch(format!(
            "expected 3x{} unfolding, got {}x{}",
            pow3(order - 1),
            m.nrows(),
            m.ncols()
        )));
    }
    let mut t = CorrTensor::zeros(subset);
    let k = mode - 1;
    for (off, v) in t.data_mut().iter_mut().enumerate() {
        let (row, col) = split_offset(off, k);
        *v = m[(row, col)];
    }
    Ok(t)
}

fn split_offset(off: usize, k: usize) -> (usize, usize) {
    let low = pow3(k);
    let row = (off / low) % 3;
    let col = off % low + (off / (low * 3)) * low;
    (row, col)
}

/// Descending singular values and matching left singular vectors of a 3 x n matrix.
fn left_svd(a: &DMatrix<f64>) -> Result<([f64; 3], Matrix3<f64>)> {
    // Reduce to 3x3 first: with A^T = QR, A A^T = R^T R, so A and R^T share
    // singular values and left vectors. Pad to at least three columns.
    let cols = a.ncols().max(3);
    let mut padded = DMatrix::zeros(3, cols);
    padded.view_mut((0, 0), (3, a.ncols())).copy_from(a);
    let r = padded.transpose().qr().r();
    let small = Matrix3::from_fn(|i, j| r[(j, i)]);
    // A too-tight convergence threshold makes nalgebra return unconverged
    // values without reporting failure; use its default and check the result.
    let svd = small.svd(true, true);
    let (u, vt) = (svd.u.ok_or(Error::SvdFailure)?, svd.v_t.ok_or(Error::SvdFailure)?);
    let back = u * Matrix3::from_diagonal(&svd.singular_values) * vt;
    let scale = small.amax().max(f64::MIN_POSITIVE);
    if (back - small).amax() > 1e-12 * scale || (u.transpose() * u - Matrix3::identity()).amax() > 1e-12 {
        return Err(Error::SvdFailure);
    }
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&i, &j| {
        svd.singular_values[j]
            .total_cmp(&svd.singular_values[i])
            .then(i.cmp(&j))
    });
    let mut values = [0.0; 3];
    let mut vecs = Matrix3::zeros();
    for (dst, &src) in order.iter().enumerate() {
        values[dst] = svd.singular_values[src].max(0.0);
        vecs.set_column(dst, &u.column(src));
    }
    Ok((values, vecs))
}

/// Make the entry of largest magnitude positive (ties: lowest index).
fn canonical_sign(v: &mut Vector3<f64>) {
    let max = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if let Some(lead) = v.iter().copied().find(|x| x.abs() >= max - 1e-12) {
        if lead < 0.0 {
            *v = -*v;
        }
    }
}

/// Deterministic orthonormal basis of the range of `proj` (rank `r`), built by
/// Gram-Schmidt over the projected standard basis, largest residual first.
fn canonical_basis(proj: &Matrix3<f64>, r: usize) -> Vec<Vector3<f64>> {
    let mut basis: Vec<Vector3<f64>> = Vec::with_capacity(r);
    let mut used = [false; 3];
    for _ in 0..r {
        let mut best: Option<(usize, Vector3<f64>, f64)> = None;
        for (i, &taken) in used.iter().enumerate() {
            if taken {
                continue;
            }
            let mut v = proj.column(i).into_owned();
            for b in &basis {
                v -= *b * b.dot(&v);
            }
            let n = v.norm();
            match best {
                Some((_, _, bn)) if n <= bn + 1e-12 => {}
                _ => best = Some((i, v, n)),
            }
        }
        let (i, v, n) = best.expect("rank exceeds dimension");
        used[i] = true;
        basis.push(v / n);
    }
    basis
}

fn canonical_factor(values: &[f64; 3], raw: &Matrix3<f64>, tol: &SpectrumTolerances) -> Matrix3<f64> {
    let blocks = spectrum_blocks(values, tol);
    let mut out = Matrix3::zeros();
    let mut nonzero_proj = Matrix3::zeros();
    for b in blocks.iter().filter(|b| !b.zero) {
        if b.len() == 1 {
            let mut v = raw.column(b.positions[0]).into_owned();
            canonical_sign(&mut v);
            nonzero_proj += v * v.transpose();
            out.set_column(b.positions[0], &v);
        } else {
            let mut proj = Matrix3::zeros();
            for &p in &b.positions {
                let v = raw.column(p);
                proj += v * v.transpose();
            }
            for (&p, mut v) in b.positions.iter().zip(canonical_basis(&proj, b.len())) {
                canonical_sign(&mut v);
                nonzero_proj += v * v.transpose();
                out.set_column(p, &v);
            }
        }
    }
    if let Some(zb) = blocks.iter().find(|b| b.zero) {
        let complement = Matrix3::identity() - nonzero_proj;
        for (&p, mut v) in zb.positions.iter().zip(canonical_basis(&complement, zb.len())) {
            canonical_sign(&mut v);
            out.set_column(p, &v);
        }
        if out.determinant() < 0.0 {
            let last = *zb.positions.last().unwrap();
            let flipped = -out.column(last);
            out.set_column(last, &flipped);
        }
    }
    out
}

/// Higher-order SVD with the default spectrum tolerances.
pub fn hosvd(t: &CorrTensor) -> Result<CoreDecomposition> {
    hosvd_with(t, &SpectrumTolerances::default())
}

pub fn hosvd_with(t: &CorrTensor, tol: &SpectrumTolerances) -> Result<CoreDecomposition> {
    let mut factors = Vec::with_capacity(t.order());
    let mut spectra = Vec::with_capacity(t.order());
    for mode in 1..=t.order() {
        let (values, raw) = left_svd(&unfold(t, mode)?)?;
        factors.push(canonical_factor(&values, &raw, tol));
        spectra.push(values);
    }
    let transposed: Vec<Matrix3<f64>> = factors.iter().map(|u| u.transpose()).collect();
    let core = t.transform(&transposed);
    Ok(CoreDecomposition {
        subset: t.subset().clone(),
        mode_factors: factors,
        mode_spectra: spectra,
        core,
    })
}

/// HOSVD of every tensor of a family.
pub fn decompose_family(
    family: &TensorFamily,
    tol: &SpectrumTolerances,
) -> Result<BTreeMap<Subset, CoreDecomposition>> {
    family
        .iter()
        .map(|(s, t)| hosvd_with(t, tol).map(|d| (s.clone(), d)))
        .collect()
}

/// Per-subset, per-mode singular spectra of a family.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectraFingerprint {
    pub n_qubits: usize,
    pub per_subset: BTreeMap<Subset, Vec<[f64; 3]>>,
}

pub fn fingerprint(family: &TensorFamily) -> Result<SpectraFingerprint> {
    let mut per_subset = BTreeMap::new();
    for (s, t) in family.iter() {
        let spectra = (1..=t.order())
            .map(|mode| left_svd(&unfold(t, mode)?).map(|(v, _)| v))
            .collect::<Result<Vec<_>>>()?;
        per_subset.insert(s.clone(), spectra);
    }
    Ok(SpectraFingerprint {
        n_qubits: family.n_qubits(),
        per_subset,
    })
}

impl SpectraFingerprint {
    pub fn from_decompositions(n_qubits: usize, decomps: &BTreeMap<Subset, CoreDecomposition>) -> Self {
        SpectraFingerprint {
            n_qubits,
            per_subset: decomps
                .iter()
                .map(|(s, d)| (s.clone(), d.mode_spectra.clone()))
                .collect(),
        }
    }
}

/// First subset/mode whose spectra disagree.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectraWitness {
    pub subset: Subset,
    /// 1-based mode.
    pub mode: usize,
    /// Max-norm gap between the two triples.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SpectraMatch {
    Match,
    Witness(SpectraWitness),
}

/// Compare fingerprints triple by triple in lexicographic subset order.
pub fn spectra_match(a: &SpectraFingerprint, b: &SpectraFingerprint, tol: f64) -> Result<SpectraMatch> {
    if a.n_qubits != b.n_qubits || a.per_subset.len() != b.per_subset.len() {
        return Err(Error::ShapeMismatch(format!(
            "fingerprints over {} and {} qubits",
            a.n_qubits, b.n_qubits
        )));
    }
    for ((sa, ta), (sb, tb)) in a.per_subset.iter().zip(&b.per_subset) {
        if sa != sb || ta.len() != tb.len() {
            return Err(Error::ShapeMismatch(format!("subset {sa} vs {sb}")));
        }
        for (k, (x, y)) in ta.iter().zip(tb).enumerate() {
            let gap = x.iter().zip(y).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
            if gap > tol || gap.is_nan() {
                return Ok(SpectraMatch::Witness(SpectraWitness {
                    subset: sa.clone(),
                    mode: k + 1,
                    gap,
                }));
            }
        }
    }
    Ok(SpectraMatch::Match)
}
