//! Seeded generators and a brute-force LU search used as ground truth.
//!
//! `direct_search` minimizes `|sigma - (xU) rho (xU)^dag|_F` over the local
//! unitaries directly. It never touches the tensor pipeline; only `qstate` is
//! shared, and the optimizer comes from the `levenberg-marquardt` crate.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::time::{Duration, Instant};

use levenberg_marquardt::{LeastSquaresProblem, LevenbergMarquardt};
use nalgebra::storage::Owned;
use nalgebra::{DMatrix, DVector, Dyn};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::qstate::{
    apply_local_unitaries, kron_all, validate_density, CMatrix, DensityMatrix, LocalUnitaryTuple, Mat2,
};
use crate::symsearch::SearchConfig;

/// Seed of every generated object.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Seed(pub u64);

impl Seed {
    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }

    /// A distinct, reproducible child seed.
    pub fn derive(self, k: u64) -> Seed {
        Seed(self.0 ^ k.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
    }
}

fn gaussian(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// `A A^dag / Tr[A A^dag]` with `A` a `2^N x rank` complex Gaussian matrix.
pub fn random_density(n_qubits: usize, rank: usize, seed: Seed) -> Result<DensityMatrix> {
    if n_qubits == 0 || n_qubits > crate::qstate::MAX_QUBITS {
        return Err(Error::InvalidQubitCount(n_qubits));
    }
    let dim = 1usize << n_qubits;
    if rank == 0 || rank > dim {
        return Err(Error::InvalidRank { rank, dim });
    }
    let mut rng = seed.rng();
    let a = DMatrix::from_fn(dim, rank, |_, _| gaussian(&mut rng));
    let m: CMatrix = &a * a.adjoint();
    let tr = m.trace().re;
    let mut m = m / Complex64::new(tr, 0.0);
    // exact Hermitian symmetry
    m = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
    validate_density(m, n_qubits)
}

/// Haar-random element of SU(2) from a normalized Gaussian 4-vector.
pub fn sample_su2(rng: &mut impl Rng) -> Mat2 {
    let v: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let a = Complex64::new(v[0] / n, v[1] / n);
    let b = Complex64::new(v[2] / n, v[3] / n);
    Mat2::new(a, b, -b.conj(), a.conj())
}

pub fn haar_su2(seed: Seed) -> Mat2 {
    sample_su2(&mut seed.rng())
}

/// `(sigma, u)` with `sigma = (xU) rho (xU)^dag` and each `U_i` Haar.
pub fn make_lu_pair(rho: &DensityMatrix, seed: Seed) -> Result<(DensityMatrix, LocalUnitaryTuple)> {
    let mut rng = seed.rng();
    let units = (0..rho.n_qubits()).map(|_| sample_su2(&mut rng)).collect();
    let u = LocalUnitaryTuple::new(units)?;
    let sigma = apply_local_unitaries(rho, &u)?;
    Ok((sigma, u))
}

/// `(1 - eps) rho + eps I / 2^N`.
pub fn depolarize(rho: &DensityMatrix, eps: f64) -> Result<DensityMatrix> {
    let d = rho.dim();
    let m =
        rho.matrix() * Complex64::new(1.0 - eps, 0.0) + CMatrix::identity(d, d) * Complex64::new(eps / d as f64, 0.0);
    validate_density(m, rho.n_qubits())
}

fn unitary(theta: f64, phi: f64, chi: f64) -> Mat2 {
    let (s, c) = theta.sin_cos();
    let a = Complex64::from_polar(c, phi);
    let b = Complex64::from_polar(s, chi);
    Mat2::new(a, b, -b.conj(), a.conj())
}

/// Partial derivatives of [`unitary`] in `theta`, `phi`, `chi`.
fn unitary_partials(theta: f64, phi: f64, chi: f64) -> [Mat2; 3] {
    let (s, c) = theta.sin_cos();
    let ep = Complex64::from_polar(1.0, phi);
    let ex = Complex64::from_polar(1.0, chi);
    let i = Complex64::new(0.0, 1.0);
    let z = Complex64::new(0.0, 0.0);
    [
        Mat2::new(-ep * s, ex * c, -ex.conj() * c, -ep.conj() * s),
        Mat2::new(i * ep * c, z, z, -i * ep.conj() * c),
        Mat2::new(z, i * ex * s, i * ex.conj() * s, z),
    ]
}

struct DirectProblem<'a> {
    rho: &'a CMatrix,
    sigma: &'a CMatrix,
    n: usize,
    params: DVector<f64>,
}

impl DirectProblem<'_> {
    fn units(&self) -> Vec<Mat2> {
        (0..self.n)
            .map(|k| unitary(self.params[3 * k], self.params[3 * k + 1], self.params[3 * k + 2]))
            .collect()
    }

    fn moved(&self) -> CMatrix {
        let w = kron_all(&self.units());
        &w * self.rho * w.adjoint()
    }
}

fn split_complex(m: &CMatrix, out: &mut [f64]) {
    let d2 = m.len();
    for (k, z) in m.iter().enumerate() {
        out[k] = z.re;
        out[d2 + k] = z.im;
    }
}

impl LeastSquaresProblem<f64, Dyn, Dyn> for DirectProblem<'_> {
    type ResidualStorage = Owned<f64, Dyn>;
    type JacobianStorage = Owned<f64, Dyn, Dyn>;
    type ParameterStorage = Owned<f64, Dyn>;

    fn set_params(&mut self, x: &DVector<f64>) {
        self.params.copy_from(x);
    }

    fn params(&self) -> DVector<f64> {
        self.params.clone()
    }

    fn residuals(&self) -> Option<DVector<f64>> {
        let diff = self.moved() - self.sigma;
        let mut out = DVector::zeros(2 * diff.len());
        split_complex(&diff, out.as_mut_slice());
        Some(out)
    }

    fn jacobian(&self) -> Option<DMatrix<f64>> {
        let units = self.units();
        let w = kron_all(&units);
        let rho_wd = self.rho * w.adjoint();
        let d2 = self.rho.len();
        let mut jac = DMatrix::zeros(2 * d2, 3 * self.n);
        let mut col = vec![0.0; 2 * d2];
        for k in 0..self.n {
            let p = &self.params;
            let partials = unitary_partials(p[3 * k], p[3 * k + 1], p[3 * k + 2]);
            for (j, du) in partials.iter().enumerate() {
                let mut factors = units.clone();
                factors[k] = *du;
                let x = kron_all(&factors) * &rho_wd;
                let dm = &x + x.adjoint();
                split_complex(&dm, &mut col);
                jac.set_column(3 * k + j, &DVector::from_column_slice(&col));
            }
        }
        Some(jac)
    }
}

/// Best tuple found by [`direct_search`].
#[derive(Debug, Clone, PartialEq)]
pub struct DirectSearchOutcome {
    pub units: LocalUnitaryTuple,
    /// `|sigma - (xU) rho (xU)^dag|_F` at the returned tuple.
    pub residual: f64,
    pub starts_used: usize,
    pub budget_exhausted: bool,
}

/// Stop early once a start gets this close.
const DIRECT_EXACT: f64 = 1e-13;

/// Multi-start minimization of `|sigma - (xU) rho (xU)^dag|_F` over chart parameters.
pub fn direct_search(rho: &DensityMatrix, sigma: &DensityMatrix, cfg: &SearchConfig) -> Result<DirectSearchOutcome> {
    cfg.validate()?;
    if rho.n_qubits() != sigma.n_qubits() {
        return Err(Error::ShapeMismatch(format!(
            "{} vs {} qubits",
            rho.n_qubits(),
            sigma.n_qubits()
        )));
    }
    let n = rho.n_qubits();
    let deadline = cfg.budget_ms.map(|ms| Instant::now() + Duration::from_millis(ms));
    let mut rng = Seed(cfg.seed).derive(0xD1E7).rng();
    let lm = LevenbergMarquardt::new().with_patience(cfg.max_iters.max(1));
    let mut best: Option<(DVector<f64>, f64)> = None;
    let mut used = 0;
    let mut exhausted = false;
    for start in 0..cfg.n_starts {
        if start > 0 && deadline.is_some_and(|d| Instant::now() >= d) {
            exhausted = true;
            break;
        }
        let x0 = if start == 0 {
            DVector::zeros(3 * n)
        } else {
            DVector::from_fn(3 * n, |i, _| match i % 3 {
                0 => rng.random_range(0.0..FRAC_PI_2),
                _ => rng.random_range(0.0..TAU),
            })
        };
        let problem = DirectProblem {
            rho: rho.matrix(),
            sigma: sigma.matrix(),
            n,
            params: x0,
        };
        let (solved, _report) = lm.minimize(problem);
        used += 1;
        let residual = (solved.moved() - sigma.matrix()).norm();
        if residual.is_finite() && best.as_ref().is_none_or(|(_, r)| residual < *r) {
            best = Some((solved.params.clone(), residual));
        }
        if residual <= DIRECT_EXACT {
            break;
        }
    }
    let (params, residual) = best.ok_or_else(|| Error::InvalidConfig("no finite residual reached".into()))?;
    let units = (0..n)
        .map(|k| unitary(params[3 * k], params[3 * k + 1], params[3 * k + 2]))
        .collect();
    Ok(DirectSearchOutcome {
        units: LocalUnitaryTuple::new(units)?,
        residual,
        starts_used: used,
        budget_exhausted: exhausted,
    })
}
