//! Local-symmetry search: decide LU equivalence from the tensor families.
//!
//! Pipeline: tensors, spectra fingerprints, exact enumeration of discrete
//! symmetries, then multi-start damped least squares where degenerate spectra
//! leave a continuum. A positive answer is only returned after the lifted
//! SU(2) tuple has been checked against the density matrices themselves.

mod candidates;
mod refine;
mod residual;

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::time::{Duration, Instant};

use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bloch::{all_tensors, Subset, TensorFamily};
use crate::error::{Error, Result};
use crate::hosvd::{
    decompose_family, spectra_match, CoreDecomposition, SpectraFingerprint, SpectraMatch, SpectraWitness,
    SpectrumTolerances,
};
use crate::liegroup::{chart_from_su2, lift_so3_to_su2, so3_from_chart, Rotation3, RotationChart};
use crate::qstate::{lu_residual, DensityMatrix, LocalUnitaryTuple};

pub use candidates::{
    block_symmetries, continuous_dims, degeneracy_blocks, discrete_candidates, is_discrete, DiscreteCandidates,
    SiteCandidates, SymmetryBlocks,
};
pub use residual::global_residual;

use candidates::{beam_seeds, site_pool};
use refine::levenberg_marquardt;
use residual::TensorProblem;

/// Knobs of the search. All randomness is derived from `seed`.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    /// Accept threshold on `max |sigma - (xU) rho (xU)^dag|`.
    pub tol_residual: f64,
    /// Max-norm tolerance when comparing singular spectra.
    pub tol_spectra: f64,
    pub n_starts: usize,
    pub max_iters: usize,
    pub seed: u64,
    pub budget_ms: Option<u64>,
    pub degeneracy_tol: f64,
    pub zero_tol: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        let st = SpectrumTolerances::default();
        SearchConfig {
            tol_residual: 1e-8,
            tol_spectra: 1e-9,
            n_starts: 64,
            max_iters: 500,
            seed: 0,
            budget_ms: None,
            degeneracy_tol: st.degeneracy,
            zero_tol: st.zero,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")))
            }
        };
        positive("tol_residual", self.tol_residual)?;
        positive("tol_spectra", self.tol_spectra)?;
        positive("degeneracy_tol", self.degeneracy_tol)?;
        positive("zero_tol", self.zero_tol)?;
        if self.n_starts == 0 {
            return Err(Error::InvalidConfig("n_starts must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be positive".into()));
        }
        if self.budget_ms == Some(0) {
            return Err(Error::InvalidConfig("budget_ms must be positive".into()));
        }
        Ok(())
    }

    pub fn spectrum_tolerances(&self) -> SpectrumTolerances {
        SpectrumTolerances {
            degeneracy: self.degeneracy_tol,
            zero: self.zero_tol,
        }
    }

    fn deadline(&self, from: Instant) -> Option<Instant> {
        self.budget_ms.map(|ms| from + Duration::from_millis(ms))
    }
}

/// Which stage of the search produced a solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolutionSource {
    /// Exact enumeration of sign symmetries; index into the sorted tuple list.
    Discrete(usize),
    /// Refinement from the given start index.
    Refined(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Equivalence {
    pub units: LocalUnitaryTuple,
    pub rotations: Vec<Rotation3>,
    pub charts: Vec<RotationChart>,
    /// Certificate residual `max |sigma - (xU) rho (xU)^dag|`.
    pub residual: f64,
    /// `global_residual` of the accepted rotations.
    pub tensor_residual: f64,
    pub source: SolutionSource,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Equivalent(Equivalence),
    Inequivalent(SpectraWitness),
    Inconclusive {
        /// Lowest `global_residual` reached.
        best_residual: f64,
        starts_used: usize,
        budget_exhausted: bool,
    },
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Equivalent(_) => "equivalent",
            Verdict::Inequivalent(_) => "inequivalent",
            Verdict::Inconclusive { .. } => "inconclusive",
        }
    }

    pub fn is_equivalent(&self) -> bool {
        matches!(self, Verdict::Equivalent(_))
    }
}

/// Result of [`continuous_refine`].
#[derive(Debug, Clone, PartialEq)]
pub struct RefineOutcome {
    pub charts: Vec<RotationChart>,
    pub rotations: Vec<Rotation3>,
    pub residual: f64,
    pub iterations: usize,
    /// Set when the wall-clock budget stopped the iteration; the result is
    /// then the best point found so far.
    pub budget_exhausted: bool,
    /// Residual after each accepted step, starting from the initial point.
    pub history: Vec<f64>,
}

fn charts_of(rots: &[Matrix3<f64>]) -> Result<Vec<RotationChart>> {
    rots.iter()
        .map(|r| lift_so3_to_su2(r).map(|u| chart_from_su2(&u)))
        .collect()
}

/// Damped least-squares refinement of a chart tuple against `global_residual`.
pub fn continuous_refine(
    start: &[RotationChart],
    fam: &TensorFamily,
    fam2: &TensorFamily,
    cfg: &SearchConfig,
) -> Result<RefineOutcome> {
    cfg.validate()?;
    let problem = TensorProblem::new(fam, fam2)?;
    if start.len() != problem.n_qubits {
        return Err(Error::ShapeMismatch(format!(
            "{} charts for {} qubits",
            start.len(),
            problem.n_qubits
        )));
    }
    if let Some(bad) = start.iter().find(|c| !c.is_finite()) {
        return Err(Error::InvalidConfig(format!("non-finite chart {bad:?}")));
    }
    let mats: Vec<Matrix3<f64>> = start.iter().map(|c| *so3_from_chart(c).matrix()).collect();
    let out = levenberg_marquardt(&problem, &mats, cfg.max_iters, cfg.deadline(Instant::now()));
    Ok(RefineOutcome {
        charts: charts_of(&out.rotations)?,
        rotations: out.rotations.iter().map(|m| Rotation3::from_unchecked(*m)).collect(),
        residual: out.cost,
        iterations: out.iterations,
        budget_exhausted: out.exhausted,
        history: out.history,
    })
}

/// `P^mu_S = V_S^T O^mu U_S` for every subset, where `U_S`, `V_S` are the HOSVD
/// factors of the first and second state. For a valid solution each `P` is a
/// local symmetry of the core and `O^mu = V P U^T` for every `S` containing `mu`.
pub fn local_symmetry_factors(
    rotations: &[Rotation3],
    decomps_a: &BTreeMap<Subset, CoreDecomposition>,
    decomps_b: &BTreeMap<Subset, CoreDecomposition>,
) -> BTreeMap<Subset, Vec<Matrix3<f64>>> {
    decomps_a
        .iter()
        .map(|(s, da)| {
            let db = &decomps_b[s];
            let ps = s
                .labels()
                .iter()
                .enumerate()
                .map(|(k, &l)| db.mode_factors[k].transpose() * rotations[l - 1].matrix() * da.mode_factors[k])
                .collect();
            (s.clone(), ps)
        })
        .collect()
}

const GRID_THETA: [f64; 5] = [0.0, PI / 8.0, PI / 4.0, 3.0 * PI / 8.0, FRAC_PI_2];
const GRID_PHASE: [f64; 4] = [0.0, FRAC_PI_2, PI, 3.0 * FRAC_PI_2];

fn grid_chart(i: usize) -> RotationChart {
    let n = GRID_PHASE.len();
    let p = i % (GRID_THETA.len() * n * n);
    RotationChart::new(GRID_THETA[p / (n * n)], GRID_PHASE[(p / n) % n], GRID_PHASE[p % n])
}

fn grid_start(g: usize, n: usize) -> Vec<Matrix3<f64>> {
    (0..n)
        .map(|mu| *so3_from_chart(&grid_chart(g * (7 + 2 * mu) + 13 * mu)).matrix())
        .collect()
}

fn random_start(rng: &mut ChaCha8Rng, n: usize) -> Vec<Matrix3<f64>> {
    (0..n)
        .map(|_| {
            let c = RotationChart::new(
                rng.random_range(0.0..FRAC_PI_2),
                rng.random_range(0.0..TAU),
                rng.random_range(0.0..TAU),
            );
            *so3_from_chart(&c).matrix()
        })
        .collect()
}

struct Certifier<'a> {
    rho: &'a DensityMatrix,
    sigma: &'a DensityMatrix,
    tol: f64,
}

impl Certifier<'_> {
    fn certify(
        &self,
        rots: &[Matrix3<f64>],
        tensor_residual: f64,
        source: SolutionSource,
    ) -> Result<Option<Equivalence>> {
        let Ok(units) = rots.iter().map(lift_so3_to_su2).collect::<Result<Vec<_>>>() else {
            return Ok(None);
        };
        let units = LocalUnitaryTuple::new(units)?;
        let residual = lu_residual(self.rho, self.sigma, &units)?;
        if residual > self.tol {
            return Ok(None);
        }
        let charts = units.units().iter().map(chart_from_su2).collect();
        Ok(Some(Equivalence {
            units,
            rotations: rots.iter().map(|m| Rotation3::from_unchecked(*m)).collect(),
            charts,
            residual,
            tensor_residual,
            source,
        }))
    }
}

/// Everything `decide` derives from the two states before searching.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub family_a: TensorFamily,
    pub family_b: TensorFamily,
    pub decomps_a: BTreeMap<Subset, CoreDecomposition>,
    pub decomps_b: BTreeMap<Subset, CoreDecomposition>,
    pub fingerprint_a: SpectraFingerprint,
    pub fingerprint_b: SpectraFingerprint,
}

pub fn analyze(rho: &DensityMatrix, sigma: &DensityMatrix, cfg: &SearchConfig) -> Result<Analysis> {
    if rho.n_qubits() != sigma.n_qubits() {
        return Err(Error::ShapeMismatch(format!(
            "{} vs {} qubits",
            rho.n_qubits(),
            sigma.n_qubits()
        )));
    }
    let tol = cfg.spectrum_tolerances();
    let family_a = all_tensors(rho)?;
    let family_b = all_tensors(sigma)?;
    let decomps_a = decompose_family(&family_a, &tol)?;
    let decomps_b = decompose_family(&family_b, &tol)?;
    let fingerprint_a = SpectraFingerprint::from_decompositions(rho.n_qubits(), &decomps_a);
    let fingerprint_b = SpectraFingerprint::from_decompositions(sigma.n_qubits(), &decomps_b);
    Ok(Analysis {
        family_a,
        family_b,
        decomps_a,
        decomps_b,
        fingerprint_a,
        fingerprint_b,
    })
}

/// Decide whether `sigma = (xU) rho (xU)^dag` for some local unitaries.
pub fn decide(rho: &DensityMatrix, sigma: &DensityMatrix, cfg: &SearchConfig) -> Result<Verdict> {
    cfg.validate()?;
    let started = Instant::now();
    let deadline = cfg.deadline(started);
    let an = analyze(rho, sigma, cfg)?;
    if let SpectraMatch::Witness(w) = spectra_match(&an.fingerprint_a, &an.fingerprint_b, cfg.tol_spectra)? {
        return Ok(Verdict::Inequivalent(w));
    }

    let n = rho.n_qubits();
    let tol = cfg.spectrum_tolerances();
    let blocks = degeneracy_blocks(&an.fingerprint_a, &tol);
    let problem = TensorProblem::new(&an.family_a, &an.family_b)?;
    let certifier = Certifier {
        rho,
        sigma,
        tol: cfg.tol_residual,
    };
    let mut best = f64::INFINITY;

    // Exact enumeration when the full-set tensor pins every site up to signs.
    let full = Subset::full(n);
    let discrete = discrete_candidates(&an.decomps_a[&full], &an.decomps_b[&full], &blocks.per_subset[&full]);
    let mut scored: Vec<(Vec<Matrix3<f64>>, f64)> = discrete
        .tuples()
        .into_iter()
        .map(|t| {
            let mats: Vec<Matrix3<f64>> = t.iter().map(|r| *r.matrix()).collect();
            let c = problem.cost(&mats);
            (mats, c)
        })
        .collect();
    scored.sort_by(|a, b| a.1.total_cmp(&b.1));
    for (i, (mats, cost)) in scored.iter().enumerate() {
        best = best.min(*cost);
        if cost.sqrt() > cfg.tol_residual {
            break;
        }
        if let Some(eq) = certifier.certify(mats, *cost, SolutionSource::Discrete(i))? {
            return Ok(Verdict::Equivalent(eq));
        }
    }

    // Multi-start refinement: HOSVD-derived seeds first, then grid and random
    // starts interleaved.
    let pools: Vec<Vec<Matrix3<f64>>> = (1..=n)
        .map(|site| site_pool(site, &an.decomps_a, &an.decomps_b, &blocks))
        .collect();
    let seeds = beam_seeds(&problem, &pools, cfg.n_starts);
    let n_seeded = seeds.len().min(cfg.n_starts.div_ceil(2));
    let mut starts: Vec<Vec<Matrix3<f64>>> = seeds.into_iter().take(n_seeded).map(|(t, _)| t).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut grid_i = 0;
    while starts.len() < cfg.n_starts {
        if (starts.len() - n_seeded).is_multiple_of(2) {
            starts.push(grid_start(grid_i, n));
            grid_i += 1;
        } else {
            starts.push(random_start(&mut rng, n));
        }
    }

    let mut used = 0;
    let mut exhausted = false;
    for (i, start) in starts.iter().enumerate() {
        if deadline.is_some_and(|d| Instant::now() >= d) {
            exhausted = true;
            break;
        }
        used += 1;
        let out = levenberg_marquardt(&problem, start, cfg.max_iters, deadline);
        best = best.min(out.cost);
        if out.cost.sqrt() <= cfg.tol_residual {
            if let Some(eq) = certifier.certify(&out.rotations, out.cost, SolutionSource::Refined(i))? {
                return Ok(Verdict::Equivalent(eq));
            }
        }
        if out.exhausted {
            exhausted = true;
            break;
        }
    }
    Ok(Verdict::Inconclusive {
        best_residual: best,
        starts_used: used,
        budget_exhausted: exhausted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liegroup::adjoint_rotation;
    use crate::qstate::{apply_local_unitaries, validate_density, CMatrix};
    use num_complex::Complex64;

    fn mixed_state() -> DensityMatrix {
        // Fixed, non-degenerate two-qubit state.
        let mut a = CMatrix::zeros(4, 4);
        let vals = [0.4, 0.3, 0.2, 0.1];
        let h = 0.5;
        let basis = [[h, h, h, h], [h, -h, h, -h], [h, h, -h, -h], [h, -h, -h, h]];
        let tilt = Complex64::new(0.8, 0.6);
        for (k, v) in vals.iter().enumerate() {
            for i in 0..4 {
                for j in 0..4 {
                    let phase = if i == 3 { tilt } else { Complex64::new(1.0, 0.0) };
                    let phase_j = if j == 3 { tilt.conj() } else { Complex64::new(1.0, 0.0) };
                    a[(i, j)] += phase * phase_j * (basis[k][i] * basis[k][j] * v);
                }
            }
        }
        // break symmetry between sites
        let mut d = CMatrix::zeros(4, 4);
        d[(0, 0)] = Complex64::new(0.1, 0.0);
        d[(1, 1)] = Complex64::new(-0.05, 0.0);
        d[(2, 2)] = Complex64::new(-0.02, 0.0);
        d[(3, 3)] = Complex64::new(-0.03, 0.0);
        validate_density(a + d, 2).unwrap()
    }

    #[test]
    fn identical_states_are_equivalent() {
        let rho = mixed_state();
        match decide(&rho, &rho, &SearchConfig::default()).unwrap() {
            Verdict::Equivalent(eq) => assert!(eq.residual <= 1e-14, "{}", eq.residual),
            v => panic!("unexpected {v:?}"),
        }
    }

    #[test]
    fn planted_rotation_is_recovered() {
        let rho = mixed_state();
        let u1 = crate::liegroup::su2_from_chart(&RotationChart::new(0.3, 1.1, 2.0));
        let u2 = crate::liegroup::su2_from_chart(&RotationChart::new(1.2, 0.4, 5.0));
        let u = LocalUnitaryTuple::new(vec![u1, u2]).unwrap();
        let sigma = apply_local_unitaries(&rho, &u).unwrap();
        let v = decide(&rho, &sigma, &SearchConfig::default()).unwrap();
        let Verdict::Equivalent(eq) = v else { panic!("{v:?}") };
        assert!(eq.residual <= 1e-10);

        let fam = all_tensors(&rho).unwrap();
        let fam2 = all_tensors(&sigma).unwrap();
        let truth: Vec<Rotation3> = [u1, u2].iter().map(|x| adjoint_rotation(x).unwrap()).collect();
        assert!(global_residual(&truth, &fam, &fam2).unwrap() <= 1e-18);

        let charts: Vec<RotationChart> = [u1, u2].iter().map(chart_from_su2).collect();
        let out = continuous_refine(&charts, &fam, &fam2, &SearchConfig::default()).unwrap();
        assert!(out.residual <= 1e-18);
        assert!(out.iterations <= 2);
    }

    #[test]
    fn config_validation() {
        let mut cfg = SearchConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.tol_residual = 0.0;
        assert!(cfg.validate().is_err());
        let cfg = SearchConfig {
            n_starts: 0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn mismatched_sizes_are_rejected() {
        let a = DensityMatrix::maximally_mixed(2).unwrap();
        let b = DensityMatrix::maximally_mixed(3).unwrap();
        assert!(matches!(
            decide(&a, &b, &SearchConfig::default()),
            Err(Error::ShapeMismatch(_))
        ));
        let fa = all_tensors(&a).unwrap();
        let fb = all_tensors(&b).unwrap();
        assert!(global_residual(&[Rotation3::identity(); 2], &fa, &fb).is_err());
    }
}
