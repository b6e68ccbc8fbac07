use std::collections::BTreeMap;

use nalgebra::Matrix3;

use super::residual::TensorProblem;
use crate::bloch::Subset;
use crate::hosvd::{spectrum_blocks, Block, CoreDecomposition, SpectraFingerprint, SpectrumTolerances};
use crate::liegroup::Rotation3;

/// Degeneracy blocks of every mode of every subset.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryBlocks {
    pub per_subset: BTreeMap<Subset, Vec<Vec<Block>>>,
}

impl SymmetryBlocks {
    pub fn get(&self, s: &Subset) -> Option<&[Vec<Block>]> {
        self.per_subset.get(s).map(Vec::as_slice)
    }
}

pub fn degeneracy_blocks(fp: &SpectraFingerprint, tol: &SpectrumTolerances) -> SymmetryBlocks {
    SymmetryBlocks {
        per_subset: fp
            .per_subset
            .iter()
            .map(|(s, modes)| (s.clone(), modes.iter().map(|m| spectrum_blocks(m, tol)).collect()))
            .collect(),
    }
}

/// Whether every block of a mode is a singleton, so the local symmetry is a
/// diagonal sign matrix.
pub fn is_discrete(blocks: &[Block]) -> bool {
    blocks.iter().all(|b| b.len() == 1)
}

/// Free parameters of the block-orthogonal symmetry group of a mode.
pub fn continuous_dims(blocks: &[Block]) -> usize {
    blocks.iter().map(|b| b.len() * (b.len() - 1) / 2).sum()
}

/// Block-diagonal signed permutation matrices: permutations inside each block,
/// arbitrary signs.
pub fn block_symmetries(blocks: &[Block]) -> Vec<Matrix3<f64>> {
    let mut out = vec![Matrix3::zeros()];
    for b in blocks {
        let mut next = Vec::new();
        for m in &out {
            for perm in permutations(&b.positions) {
                for signs in 0..(1u32 << b.len()) {
                    let mut m2 = *m;
                    for (k, (&row, &col)) in b.positions.iter().zip(&perm).enumerate() {
                        m2[(row, col)] = if signs >> k & 1 == 1 { -1.0 } else { 1.0 };
                    }
                    next.push(m2);
                }
            }
        }
        out = next;
    }
    out
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

/// Rotations `V P U^T` over the block symmetries `P` that land in SO(3).
pub(crate) fn factor_products(u: &Matrix3<f64>, v: &Matrix3<f64>, blocks: &[Block]) -> Vec<Matrix3<f64>> {
    let want = (v.determinant() * u.determinant()).signum();
    block_symmetries(blocks)
        .into_iter()
        .filter(|p| p.determinant().signum() == want)
        .map(|p| v * p * u.transpose())
        .collect()
}

/// Per-site outcome of the discrete enumeration.
#[derive(Debug, Clone, PartialEq)]
pub enum SiteCandidates {
    /// Finitely many rotations, one of which must hold if the states are equivalent.
    Discrete(Vec<Rotation3>),
    /// Degenerate spectrum: a continuum of symmetries, left to refinement.
    Continuous,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteCandidates {
    pub sites: Vec<SiteCandidates>,
}

impl DiscreteCandidates {
    pub fn all_discrete(&self) -> bool {
        self.sites.iter().all(|s| matches!(s, SiteCandidates::Discrete(_)))
    }

    /// Cartesian product of the per-site sets; empty unless every site is discrete.
    pub fn tuples(&self) -> Vec<Vec<Rotation3>> {
        if !self.all_discrete() {
            return Vec::new();
        }
        let mut out: Vec<Vec<Rotation3>> = vec![Vec::new()];
        for site in &self.sites {
            if let SiteCandidates::Discrete(set) = site {
                out = out
                    .iter()
                    .flat_map(|prefix| {
                        set.iter().map(move |r| {
                            let mut t = prefix.clone();
                            t.push(*r);
                            t
                        })
                    })
                    .collect();
            }
        }
        out
    }
}

/// Enumerate `V^mu P U^mu^T` for each mode of one subset's decompositions.
///
/// `dec_a` decomposes the first state's tensor, `dec_b` the second's; `blocks`
/// are the mode blocks of that subset.
pub fn discrete_candidates(
    dec_a: &CoreDecomposition,
    dec_b: &CoreDecomposition,
    blocks: &[Vec<Block>],
) -> DiscreteCandidates {
    let sites = blocks
        .iter()
        .enumerate()
        .map(|(k, b)| {
            if is_discrete(b) {
                SiteCandidates::Discrete(
                    factor_products(&dec_a.mode_factors[k], &dec_b.mode_factors[k], b)
                        .into_iter()
                        .map(Rotation3::from_unchecked)
                        .collect(),
                )
            } else {
                SiteCandidates::Continuous
            }
        })
        .collect();
    DiscreteCandidates { sites }
}

/// Candidate rotations for one site, collected over every subset containing it.
pub(crate) fn site_pool(
    site: usize,
    decomps_a: &BTreeMap<Subset, CoreDecomposition>,
    decomps_b: &BTreeMap<Subset, CoreDecomposition>,
    blocks: &SymmetryBlocks,
) -> Vec<Matrix3<f64>> {
    let mut pool: Vec<Matrix3<f64>> = Vec::new();
    for (s, da) in decomps_a {
        let Some(k) = s.mode_of(site) else { continue };
        let db = &decomps_b[s];
        let b = &blocks.per_subset[s][k];
        for r in factor_products(&da.mode_factors[k], &db.mode_factors[k], b) {
            if !pool.iter().any(|q| (q - r).abs().max() < 1e-9) {
                pool.push(r);
            }
        }
    }
    pool
}

/// Assign sites in order, keeping the `width` partial tuples with the lowest
/// residual over the subsets already fully assigned.
pub(crate) fn beam_seeds(
    problem: &TensorProblem,
    pools: &[Vec<Matrix3<f64>>],
    width: usize,
) -> Vec<(Vec<Matrix3<f64>>, f64)> {
    let n = pools.len();
    let mut beam: Vec<(Vec<Matrix3<f64>>, f64)> = vec![(vec![Matrix3::identity(); n], 0.0)];
    for site in 1..=n {
        let mut next = Vec::with_capacity(beam.len() * pools[site - 1].len());
        for (tuple, score) in &beam {
            for cand in &pools[site - 1] {
                let mut t = tuple.clone();
                t[site - 1] = *cand;
                let added = problem.cost_where(&t, |s| s.max_label() == site);
                next.push((t, score + added));
            }
        }
        next.sort_by(|a, b| a.1.total_cmp(&b.1));
        next.truncate(width.max(1));
        beam = next;
    }
    beam
}
