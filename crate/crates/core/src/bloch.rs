//! Bloch correlation tensors.
//!
//! For a subset `S = {mu_1 < ... < mu_M}` the tensor entry at axes
//! `(a_1, ..., a_M)` is the raw expectation `Tr[rho sigma_{a_1}^{mu_1} ... sigma_{a_M}^{mu_M}]`.
//! The state is recovered as `rho = 2^-N [I + sum_S sum_a T^S_a P^S_a]`.
//!
//! Entries are stored flat with mode `k` (zero-based) at stride `3^k`, so mode 1
//! varies fastest.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::Matrix3;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::qstate::{validate_density, CMatrix, DensityMatrix, PauliMonomial};

/// Imaginary parts above this mean the input was not Hermitian.
pub const IMAG_TOL: f64 = 1e-8;

/// Strictly increasing, 1-based subsystem labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Subset(Vec<usize>);

impl Subset {
    pub fn new(labels: Vec<usize>) -> Result<Self> {
        if labels.is_empty() || labels[0] == 0 || labels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSubset(labels));
        }
        Ok(Subset(labels))
    }

    pub fn labels(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, label: usize) -> bool {
        self.0.binary_search(&label).is_ok()
    }

    /// Zero-based mode of `label` inside this subset.
    pub fn mode_of(&self, label: usize) -> Option<usize> {
        self.0.binary_search(&label).ok()
    }

    pub fn max_label(&self) -> usize {
        *self.0.last().unwrap()
    }

    /// Every nonempty subset of `{1..n}` in lexicographic order.
    pub fn all(n: usize) -> Vec<Subset> {
        let mut out: Vec<Subset> = (1u64..(1u64 << n))
            .map(|mask| Subset((0..n).filter(|i| mask >> i & 1 == 1).map(|i| i + 1).collect()))
            .collect();
        out.sort();
        out
    }

    pub fn full(n: usize) -> Subset {
        Subset((1..=n).collect())
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, "}}")
    }
}

/// Real order-M tensor with every mode of dimension 3.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrTensor {
    subset: Subset,
    data: Vec<f64>,
}

pub(crate) fn pow3(k: usize) -> usize {
    3usize.pow(k as u32)
}

impl CorrTensor {
    pub fn new(subset: Subset, data: Vec<f64>) -> Result<Self> {
        let want = pow3(subset.len());
        if data.len() != want {
            return Err(Error::ShapeMismatch(format!(
                "order-{} tensor needs {want} entries, got {}",
                subset.len(),
                data.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::ShapeMismatch("non-finite tensor entry".into()));
        }
        Ok(CorrTensor { subset, data })
    }

    pub fn zeros(subset: Subset) -> Self {
        let n = pow3(subset.len());
        CorrTensor {
            subset,
            data: vec![0.0; n],
        }
    }

    pub fn subset(&self) -> &Subset {
        &self.subset
    }

    pub fn order(&self) -> usize {
        self.subset.len()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Flat offset of zero-based axes.
    pub fn offset(axes: &[usize]) -> usize {
        axes.iter().rev().fold(0, |acc, &a| acc * 3 + a)
    }

    /// Zero-based axes of a flat offset.
    pub fn axes_of(offset: usize, order: usize) -> Vec<usize> {
        let mut rest = offset;
        (0..order)
            .map(|_| {
                let a = rest % 3;
                rest /= 3;
                a
            })
            .collect()
    }

    pub fn get(&self, axes: &[usize]) -> f64 {
        self.data[Self::offset(axes)]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }

    pub fn max_abs_diff(&self, other: &CorrTensor) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Mode-`mode` product (zero-based): `out[.., b, ..] = sum_a m[b, a] t[.., a, ..]`.
    pub fn mode_product(&self, mode: usize, m: &Matrix3<f64>) -> CorrTensor {
        let stride = pow3(mode);
        let mut out = vec![0.0; self.data.len()];
        for base in (0..self.data.len()).filter(|i| (i / stride).is_multiple_of(3)) {
            let v = [self.data[base], self.data[base + stride], self.data[base + 2 * stride]];
            for b in 0..3 {
                out[base + b * stride] = m[(b, 0)] * v[0] + m[(b, 1)] * v[1] + m[(b, 2)] * v[2];
            }
        }
        CorrTensor {
            subset: self.subset.clone(),
            data: out,
        }
    }

    /// Multilinear action `(m_1 x ... x m_M) T`.
    pub fn transform(&self, mats: &[Matrix3<f64>]) -> CorrTensor {
        assert_eq!(mats.len(), self.order(), "one matrix per mode");
        mats.iter()
            .enumerate()
            .fold(self.clone(), |t, (k, m)| t.mode_product(k, m))
    }
}

/// The complete family of correlation tensors of an N-qubit state.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorFamily {
    n_qubits: usize,
    tensors: BTreeMap<Subset, CorrTensor>,
}

impl TensorFamily {
    pub fn new(n_qubits: usize, tensors: BTreeMap<Subset, CorrTensor>) -> Result<Self> {
        for s in Subset::all(n_qubits) {
            match tensors.get(&s) {
                Some(t) if t.subset() == &s => {}
                Some(_) => return Err(Error::InvalidSubset(s.labels().to_vec())),
                None => return Err(Error::IncompleteFamily(s.labels().to_vec())),
            }
        }
        if tensors.len() != (1usize << n_qubits) - 1 {
            let extra = tensors
                .keys()
                .find(|k| k.max_label() > n_qubits)
                .map(|k| k.labels().to_vec())
                .unwrap_or_default();
            return Err(Error::InvalidSubset(extra));
        }
        Ok(TensorFamily { n_qubits, tensors })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn get(&self, s: &Subset) -> Option<&CorrTensor> {
        self.tensors.get(s)
    }

    /// Tensors in lexicographic subset order.
    pub fn iter(&self) -> impl Iterator<Item = (&Subset, &CorrTensor)> {
        self.tensors.iter()
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    /// Apply one 3x3 matrix per subsystem to every tensor.
    pub fn transform(&self, per_site: &[Matrix3<f64>]) -> TensorFamily {
        assert_eq!(per_site.len(), self.n_qubits);
        let tensors = self
            .tensors
            .iter()
            .map(|(s, t)| {
                let mats: Vec<Matrix3<f64>> = s.labels().iter().map(|&l| per_site[l - 1]).collect();
                (s.clone(), t.transform(&mats))
            })
            .collect();
        TensorFamily {
            n_qubits: self.n_qubits,
            tensors,
        }
    }
}

fn check_subset(subset: &Subset, n_qubits: usize) -> Result<()> {
    if subset.max_label() > n_qubits {
        return Err(Error::InvalidSubset(subset.labels().to_vec()));
    }
    Ok(())
}

/// Correlation tensor of `rho` over `subset`.
pub fn correlation_tensor(rho: &DensityMatrix, subset: &Subset) -> Result<CorrTensor> {
    let n = rho.n_qubits();
    check_subset(subset, n)?;
    let order = subset.len();
    let mut data = Vec::with_capacity(pow3(order));
    let mut codes = vec![0u8; n];
    for off in 0..pow3(order) {
        let axes = CorrTensor::axes_of(off, order);
        for (&mu, &a) in subset.labels().iter().zip(&axes) {
            codes[mu - 1] = a as u8 + 1;
        }
        let z = PauliMonomial::from_codes(&codes).trace_with(rho.matrix());
        if z.im.abs() > IMAG_TOL {
            return Err(Error::NonRealExpectation(z.im));
        }
        data.push(z.re);
    }
    CorrTensor::new(subset.clone(), data)
}

/// Correlation tensors over every nonempty subset.
pub fn all_tensors(rho: &DensityMatrix) -> Result<TensorFamily> {
    let n = rho.n_qubits();
    let tensors = Subset::all(n)
        .into_iter()
        .map(|s| correlation_tensor(rho, &s).map(|t| (s, t)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    Ok(TensorFamily { n_qubits: n, tensors })
}

/// Rebuild the density matrix from a complete family.
pub fn reconstruct(family: &TensorFamily) -> Result<DensityMatrix> {
    let n = family.n_qubits;
    let d = 1usize << n;
    let mut m = CMatrix::identity(d, d);
    let mut codes = vec![0u8; n];
    for (s, t) in &family.tensors {
        codes.iter_mut().for_each(|c| *c = 0);
        for (off, &v) in t.data().iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            let axes = CorrTensor::axes_of(off, s.len());
            for (&mu, &a) in s.labels().iter().zip(&axes) {
                codes[mu - 1] = a as u8 + 1;
            }
            PauliMonomial::from_codes(&codes).add_scaled_to(&mut m, v);
        }
    }
    m *= Complex64::new(1.0 / d as f64, 0.0);
    validate_density(m, n)
}

/// `2^-N [1 + sum of squared entries]`, equal to `Tr[rho^2]`.
pub fn purity_from_family(family: &TensorFamily) -> f64 {
    let total: f64 = family.tensors.values().map(CorrTensor::norm_sqr).sum();
    (1.0 + total) / (1usize << family.n_qubits) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::CMatrix;

    fn pure(amps: &[Complex64], n: usize) -> DensityMatrix {
        let v = nalgebra::DVector::from_column_slice(amps);
        let m: CMatrix = &v * v.adjoint();
        validate_density(m, n).unwrap()
    }

    #[test]
    fn subsets_are_lexicographic() {
        let all: Vec<Vec<usize>> = Subset::all(3).iter().map(|s| s.labels().to_vec()).collect();
        assert_eq!(
            all,
            vec![
                vec![1],
                vec![1, 2],
                vec![1, 2, 3],
                vec![1, 3],
                vec![2],
                vec![2, 3],
                vec![3]
            ]
        );
    }

    #[test]
    fn ground_state_bloch_vector() {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let rho = pure(&[one, zero], 1);
        let t = correlation_tensor(&rho, &Subset::new(vec![1]).unwrap()).unwrap();
        assert_eq!(t.data(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn bell_state_correlations() {
        let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let z = Complex64::new(0.0, 0.0);
        let rho = pure(&[h, z, z, h], 2);
        let fam = all_tensors(&rho).unwrap();
        let s1 = Subset::new(vec![1]).unwrap();
        let s2 = Subset::new(vec![2]).unwrap();
        let s12 = Subset::new(vec![1, 2]).unwrap();
        assert!(fam.get(&s1).unwrap().norm_sqr() < 1e-28);
        assert!(fam.get(&s2).unwrap().norm_sqr() < 1e-28);
        let t = fam.get(&s12).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                let want = match (a, b) {
                    (0, 0) => 1.0,
                    (1, 1) => -1.0,
                    (2, 2) => 1.0,
                    _ => 0.0,
                };
                assert!((t.get(&[a, b]) - want).abs() < 1e-14, "({a},{b})");
            }
        }
    }

    #[test]
    fn maximally_mixed_has_zero_family() {
        let rho = DensityMatrix::maximally_mixed(3).unwrap();
        let fam = all_tensors(&rho).unwrap();
        assert_eq!(fam.len(), 7);
        assert!(fam.iter().all(|(_, t)| t.norm_sqr() == 0.0));
        let back = reconstruct(&fam).unwrap();
        assert!(back.max_abs_diff(&rho) < 1e-15);
    }

    #[test]
    fn invalid_subsets() {
        assert!(Subset::new(vec![]).is_err());
        assert!(Subset::new(vec![2, 2]).is_err());
        let rho = DensityMatrix::maximally_mixed(2).unwrap();
        let s = Subset::new(vec![1, 3]).unwrap();
        assert!(matches!(correlation_tensor(&rho, &s), Err(Error::InvalidSubset(_))));
    }

    #[test]
    fn incomplete_family_is_rejected() {
        let mut map = BTreeMap::new();
        let s = Subset::new(vec![1]).unwrap();
        map.insert(s.clone(), CorrTensor::zeros(s));
        assert!(matches!(TensorFamily::new(2, map), Err(Error::IncompleteFamily(l)) if l == vec![1, 2]));
    }

    #[test]
    fn offsets_round_trip() {
        for off in 0..27 {
            assert_eq!(CorrTensor::offset(&CorrTensor::axes_of(off, 3)), off);
        }
        assert_eq!(CorrTensor::offset(&[1, 0, 0]), 1);
        assert_eq!(CorrTensor::offset(&[0, 1, 0]), 3);
    }
}
