//! Density matrices, Pauli strings and local-unitary action.
//!
//! Subsystem 1 is the leftmost tensor factor, i.e. the most significant bit
//! of a computational-basis index. `|0>` is `(1, 0)^T` and `sigma_z = diag(1, -1)`.

use nalgebra::{DMatrix, Matrix2, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type Mat2 = Matrix2<Complex64>;

pub const HERMITIAN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-10;
pub const UNITARY_TOL: f64 = 1e-10;

/// Largest register handled. Dense 2^N x 2^N storage grows quickly past this.
pub const MAX_QUBITS: usize = 10;

/// A validated multi-qubit density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    entries: CMatrix,
}

impl DensityMatrix {
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_matrix(self) -> CMatrix {
        self.entries
    }

    /// The maximally mixed state `I / 2^N`.
    pub fn maximally_mixed(n_qubits: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        let d = 1usize << n_qubits;
        let m = CMatrix::identity(d, d) * Complex64::new(1.0 / d as f64, 0.0);
        Ok(DensityMatrix { n_qubits, entries: m })
    }

    /// `Tr[rho^2]`.
    pub fn purity(&self) -> f64 {
        let m = &self.entries;
        m.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        max_abs_diff(&self.entries, &other.entries)
    }
}

fn check_qubits(n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::InvalidQubitCount(n));
    }
    Ok(())
}

pub(crate) fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Validate a raw matrix as an `n_qubits` density matrix.
pub fn validate_density(raw: CMatrix, n_qubits: usize) -> Result<DensityMatrix> {
    check_qubits(n_qubits)?;
    let d = 1usize << n_qubits;
    if raw.nrows() != d || raw.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            rows: raw.nrows(),
            cols: raw.ncols(),
        });
    }
    for i in 0..d {
        for j in 0..d {
            let z = raw[(i, j)];
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::NonFinite(i, j));
            }
        }
    }
    let herm = max_abs_diff(&raw, &raw.adjoint());
    if herm > HERMITIAN_TOL {
        return Err(Error::NotHermitian(herm));
    }
    let tr = raw.trace();
    let tr_err = (tr - Complex64::new(1.0, 0.0)).norm();
    if tr_err > TRACE_TOL {
        return Err(Error::TraceNotOne(tr_err));
    }
    // Symmetrize so the eigen-solver sees an exactly Hermitian input.
    let sym = (&raw + raw.adjoint()) * Complex64::new(0.5, 0.0);
    let min_eig = hermitian_eigenvalues(&sym).into_iter().fold(f64::INFINITY, f64::min);
    if min_eig < -PSD_TOL {
        return Err(Error::NotPositive(min_eig));
    }
    Ok(DensityMatrix { n_qubits, entries: raw })
}

fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect()
}

/// Descending eigenvalues of `rho`.
pub fn spectrum(rho: &DensityMatrix) -> Vec<f64> {
    let m = &rho.entries;
    let sym = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let mut ev = hermitian_eigenvalues(&sym);
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

/// Single-qubit Pauli axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    X = 1,
    Y = 2,
    Z = 3,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn from_index(i: usize) -> Option<Axis> {
        match i {
            1 => Some(Axis::X),
            2 => Some(Axis::Y),
            3 => Some(Axis::Z),
            _ => None,
        }
    }

    /// Zero-based position (x = 0, y = 1, z = 2).
    pub fn offset(self) -> usize {
        self as usize - 1
    }

    pub fn matrix(self) -> Mat2 {
        let o = Complex64::new(0.0, 0.0);
        let l = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match self {
            Axis::X => Mat2::new(o, l, l, o),
            Axis::Y => Mat2::new(o, -i, i, o),
            Axis::Z => Mat2::new(l, o, o, -l),
        }
    }
}

/// A Pauli string: `sigma_{axes[k]}` on subsystem `subset[k]`, identity elsewhere.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PauliIndex {
    subset: Vec<usize>,
    axes: Vec<Axis>,
}

impl PauliIndex {
    /// `subset` holds 1-based subsystem labels in strictly increasing order.
    pub fn new(subset: Vec<usize>, axes: Vec<Axis>) -> Result<Self> {
        if subset.is_empty() {
            return Err(Error::InvalidIndex("empty subset".into()));
        }
        if subset.len() != axes.len() {
            return Err(Error::InvalidIndex(format!(
                "{} labels but {} axes",
                subset.len(),
                axes.len()
            )));
        }
        if subset[0] == 0 || subset.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidIndex(format!(
                "labels must be 1-based and strictly increasing: {subset:?}"
            )));
        }
        Ok(PauliIndex { subset, axes })
    }

    pub fn subset(&self) -> &[usize] {
        &self.subset
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    fn check_against(&self, n_qubits: usize) -> Result<()> {
        match self.subset.last() {
            Some(&last) if last <= n_qubits => Ok(()),
            _ => Err(Error::InvalidIndex(format!(
                "label out of range for {n_qubits} qubits: {:?}",
                self.subset
            ))),
        }
    }

    /// Per-site code: 0 = identity, 1..=3 = x, y, z.
    pub(crate) fn site_codes(&self, n_qubits: usize) -> Vec<u8> {
        let mut codes = vec![0u8; n_qubits];
        for (&mu, &a) in self.subset.iter().zip(&self.axes) {
            codes[mu - 1] = a as u8;
        }
        codes
    }
}

/// Dense matrix of the Pauli string `idx` on `n_qubits` qubits.
pub fn pauli_string(idx: &PauliIndex, n_qubits: usize) -> Result<CMatrix> {
    check_qubits(n_qubits)?;
    idx.check_against(n_qubits)?;
    let codes = idx.site_codes(n_qubits);
    let factors: Vec<Mat2> = codes
        .iter()
        .map(|&c| match c {
            0 => Mat2::identity(),
            a => Axis::from_index(a as usize).unwrap().matrix(),
        })
        .collect();
    Ok(kron_all(&factors))
}

/// Kronecker product of 2x2 factors, first factor leftmost.
pub fn kron_all(factors: &[Mat2]) -> CMatrix {
    let mut acc = CMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
    for f in factors {
        let d = acc.nrows();
        let mut next = CMatrix::zeros(2 * d, 2 * d);
        for i in 0..d {
            for j in 0..d {
                let a = acc[(i, j)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for r in 0..2 {
                    for c in 0..2 {
                        next[(2 * i + r, 2 * j + c)] = a * f[(r, c)];
                    }
                }
            }
        }
        acc = next;
    }
    acc
}

/// Monomial form of a Pauli string: `P[row, col] != 0` iff `row = col ^ flip`.
#[derive(Debug, Clone)]
pub(crate) struct PauliMonomial {
    pub flip: usize,
    /// `phase[col] = P[col ^ flip, col]`.
    pub phase: Vec<Complex64>,
}

impl PauliMonomial {
    pub fn from_codes(codes: &[u8]) -> Self {
        let n = codes.len();
        let d = 1usize << n;
        let mut flip = 0usize;
        for (k, &c) in codes.iter().enumerate() {
            if c == 1 || c == 2 {
                flip |= 1 << (n - 1 - k);
            }
        }
        let i = Complex64::new(0.0, 1.0);
        let phase = (0..d)
            .map(|col| {
                let mut p = Complex64::new(1.0, 0.0);
                for (k, &c) in codes.iter().enumerate() {
                    let bit = (col >> (n - 1 - k)) & 1;
                    match c {
                        // Y|0> = i|1>, Y|1> = -i|0>
                        2 => p *= if bit == 0 { i } else { -i },
                        3 if bit == 1 => p = -p,
                        _ => {}
                    }
                }
                p
            })
            .collect();
        PauliMonomial { flip, phase }
    }

    /// `Tr[m P]`.
    pub fn trace_with(&self, m: &CMatrix) -> Complex64 {
        (0..self.phase.len())
            .map(|col| m[(col, col ^ self.flip)] * self.phase[col])
            .sum()
    }

    /// `m += coeff * P`.
    pub fn add_scaled_to(&self, m: &mut CMatrix, coeff: f64) {
        for col in 0..self.phase.len() {
            m[(col ^ self.flip, col)] += self.phase[col] * coeff;
        }
    }
}

/// Tuple of single-qubit unitaries `U_1, ..., U_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalUnitaryTuple {
    units: Vec<Mat2>,
}

impl LocalUnitaryTuple {
    pub fn new(units: Vec<Mat2>) -> Result<Self> {
        if units.is_empty() {
            return Err(Error::InvalidQubitCount(0));
        }
        for u in &units {
            let defect = unitarity_defect(u);
            if defect > UNITARY_TOL {
                return Err(Error::NotUnitary(defect));
            }
        }
        Ok(LocalUnitaryTuple { units })
    }

    pub fn identity(n: usize) -> Self {
        LocalUnitaryTuple {
            units: vec![Mat2::identity(); n],
        }
    }

    pub fn units(&self) -> &[Mat2] {
        &self.units
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    /// Site-wise product `self_i * other_i` (apply `other` first).
    pub fn compose(&self, other: &LocalUnitaryTuple) -> Result<LocalUnitaryTuple> {
        if self.len() != other.len() {
            return Err(Error::ArityMismatch {
                expected: self.len(),
                got: other.len(),
            });
        }
        Ok(LocalUnitaryTuple {
            units: self.units.iter().zip(&other.units).map(|(a, b)| a * b).collect(),
        })
    }

    pub fn kron(&self) -> CMatrix {
        kron_all(&self.units)
    }
}

/// `max |U^dag U - I|`.
pub fn unitarity_defect(u: &Mat2) -> f64 {
    let p = u.adjoint() * u - Mat2::identity();
    p.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `(U_1 x ... x U_N) rho (U_1 x ... x U_N)^dag`.
pub fn apply_local_unitaries(rho: &DensityMatrix, u: &LocalUnitaryTuple) -> Result<DensityMatrix> {
    if u.len() != rho.n_qubits {
        return Err(Error::ArityMismatch {
            expected: rho.n_qubits,
            got: u.len(),
        });
    }
    let w = u.kron();
    let out = &w * &rho.entries * w.adjoint();
    validate_density(out, rho.n_qubits)
}

/// Certificate residual: `max |sigma - (xU) rho (xU)^dag|`.
pub fn lu_residual(rho: &DensityMatrix, sigma: &DensityMatrix, u: &LocalUnitaryTuple) -> Result<f64> {
    if rho.n_qubits != sigma.n_qubits {
        return Err(Error::ShapeMismatch(format!(
            "{} vs {} qubits",
            rho.n_qubits, sigma.n_qubits
        )));
    }
    if u.len() != rho.n_qubits {
        return Err(Error::ArityMismatch {
            expected: rho.n_qubits,
            got: u.len(),
        });
    }
    let w = u.kron();
    let moved = &w * &rho.entries * w.adjoint();
    Ok(max_abs_diff(&moved, &sigma.entries))
}
