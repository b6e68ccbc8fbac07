use nalgebra::{DMatrix, DVector, Matrix3};

use crate::bloch::{CorrTensor, Subset, TensorFamily};
use crate::error::{Error, Result};
use crate::liegroup::{hat, Rotation3};

/// Paired tensor families of the two states, flattened for repeated evaluation.
#[derive(Debug, Clone)]
pub(crate) struct TensorProblem {
    pub n_qubits: usize,
    terms: Vec<(Subset, CorrTensor, CorrTensor)>,
    len: usize,
}

impl TensorProblem {
    pub fn new(fam: &TensorFamily, fam2: &TensorFamily) -> Result<Self> {
        if fam.n_qubits() != fam2.n_qubits() {
            return Err(Error::ShapeMismatch(format!(
                "families over {} and {} qubits",
                fam.n_qubits(),
                fam2.n_qubits()
            )));
        }
        let mut terms = Vec::with_capacity(fam.len());
        for (s, t) in fam.iter() {
            let t2 = fam2
                .get(s)
                .ok_or_else(|| Error::IncompleteFamily(s.labels().to_vec()))?;
            terms.push((s.clone(), t.clone(), t2.clone()));
        }
        let len = terms.iter().map(|(_, t, _)| t.data().len()).sum();
        Ok(TensorProblem {
            n_qubits: fam.n_qubits(),
            terms,
            len,
        })
    }

    fn site_mats(s: &Subset, rots: &[Matrix3<f64>]) -> Vec<Matrix3<f64>> {
        s.labels().iter().map(|&l| rots[l - 1]).collect()
    }

    /// `sum_S |T'^S - (x R) T^S|_F^2`, restricted to subsets accepted by `keep`.
    pub fn cost_where(&self, rots: &[Matrix3<f64>], keep: impl Fn(&Subset) -> bool) -> f64 {
        self.terms
            .iter()
            .filter(|(s, _, _)| keep(s))
            .map(|(s, t, t2)| {
                let moved = t.transform(&Self::site_mats(s, rots));
                moved
                    .data()
                    .iter()
                    .zip(t2.data())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
            })
            .sum()
    }

    pub fn cost(&self, rots: &[Matrix3<f64>]) -> f64 {
        self.cost_where(rots, |_| true)
    }

    /// Residual vector `(x R) T - T'` and its Jacobian with respect to right
    /// perturbations `R_mu exp([w_mu]_x)`.
    pub fn residual_and_jacobian(&self, rots: &[Matrix3<f64>]) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.n_qubits;
        let gens = [
            hat(&nalgebra::Vector3::x()),
            hat(&nalgebra::Vector3::y()),
            hat(&nalgebra::Vector3::z()),
        ];
        let mut r = DVector::zeros(self.len);
        let mut jac = DMatrix::zeros(self.len, 3 * n);
        let mut row = 0;
        for (s, t, t2) in &self.terms {
            let mats = Self::site_mats(s, rots);
            let moved = t.transform(&mats);
            let len = moved.data().len();
            for (i, (a, b)) in moved.data().iter().zip(t2.data()).enumerate() {
                r[row + i] = a - b;
            }
            for (k, &label) in s.labels().iter().enumerate() {
                for (g, gen) in gens.iter().enumerate() {
                    let mut dm = mats.clone();
                    dm[k] = mats[k] * gen;
                    let d = t.transform(&dm);
                    for (i, v) in d.data().iter().enumerate() {
                        jac[(row + i, 3 * (label - 1) + g)] = *v;
                    }
                }
            }
            row += len;
        }
        (r, jac)
    }
}

/// `sum_S |T'^S - (x_{mu in S} O^mu) T^S|_F^2` over every nonempty subset.
pub fn global_residual(rotations: &[Rotation3], fam: &TensorFamily, fam2: &TensorFamily) -> Result<f64> {
    let problem = TensorProblem::new(fam, fam2)?;
    if rotations.len() != problem.n_qubits {
        return Err(Error::ShapeMismatch(format!(
            "{} rotations for {} qubits",
            rotations.len(),
            problem.n_qubits
        )));
    }
    let mats: Vec<Matrix3<f64>> = rotations.iter().map(|r| *r.matrix()).collect();
    Ok(problem.cost(&mats))
}
