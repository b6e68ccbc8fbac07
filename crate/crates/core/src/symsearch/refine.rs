//! Damped least squares over local rotation increments.
//!
//! Each site rotation is updated as `R <- R exp([w]_x)`, so the 3N parameters
//! are always a regular chart around the current iterate. This avoids the
//! coordinate singularities of the `(theta, phi, chi)` chart at theta = 0 and
//! theta = pi/2.

use std::time::Instant;

use nalgebra::{DMatrix, Matrix3, Vector3};

use super::residual::TensorProblem;
use crate::liegroup::exp_so3;

/// Cost below which the iterate is treated as an exact solution.
const CONVERGED_COST: f64 = 1e-30;

#[derive(Debug, Clone)]
pub(crate) struct LmOutcome {
    pub rotations: Vec<Matrix3<f64>>,
    pub cost: f64,
    pub iterations: usize,
    /// Stopped by the wall-clock budget rather than convergence.
    pub exhausted: bool,
    /// Cost after every accepted step, starting with the initial cost.
    pub history: Vec<f64>,
}

fn orthonormalize(m: &Matrix3<f64>) -> Matrix3<f64> {
    let c0 = m.column(0).normalize();
    let c1 = (m.column(1) - c0 * c0.dot(&m.column(1))).normalize();
    let c2 = c0.cross(&c1);
    Matrix3::from_columns(&[c0, c1, c2])
}

pub(crate) fn levenberg_marquardt(
    problem: &TensorProblem,
    start: &[Matrix3<f64>],
    max_iters: usize,
    deadline: Option<Instant>,
) -> LmOutcome {
    let n = start.len();
    let mut rots: Vec<Matrix3<f64>> = start.iter().map(orthonormalize).collect();
    let mut cost = problem.cost(&rots);
    let mut history = vec![cost];
    let mut lambda: Option<f64> = None;
    let mut iterations = 0;
    let mut exhausted = false;

    while iterations < max_iters && cost > CONVERGED_COST {
        if deadline.is_some_and(|d| Instant::now() >= d) {
            exhausted = true;
            break;
        }
        iterations += 1;
        let (r, jac) = problem.residual_and_jacobian(&rots);
        let jt = jac.transpose();
        let h = &jt * &jac;
        let g = &jt * &r;
        if g.amax() < 1e-300 {
            break;
        }
        let scale = h.diagonal().amax().max(1e-300);
        let mut lam = lambda.unwrap_or(1e-3 * scale);
        let mut accepted = false;
        for _ in 0..60 {
            let a = &h + DMatrix::identity(3 * n, 3 * n) * lam;
            let Some(chol) = a.cholesky() else {
                lam *= 4.0;
                continue;
            };
            let step = -chol.solve(&g);
            let trial: Vec<Matrix3<f64>> = rots
                .iter()
                .enumerate()
                .map(|(i, rot)| {
                    let w = Vector3::new(step[3 * i], step[3 * i + 1], step[3 * i + 2]);
                    rot * exp_so3(&w)
                })
                .collect();
            let trial_cost = problem.cost(&trial);
            if trial_cost < cost {
                rots = trial;
                cost = trial_cost;
                lambda = Some((lam / 3.0).max(1e-18 * scale));
                accepted = true;
                break;
            }
            lam *= 4.0;
            if lam > 1e16 * scale {
                break;
            }
        }
        if !accepted {
            break;
        }
        history.push(cost);
    }

    let polished: Vec<Matrix3<f64>> = rots.iter().map(orthonormalize).collect();
    let polished_cost = problem.cost(&polished);
    if polished_cost <= cost {
        rots = polished;
        cost = polished_cost;
    }
    LmOutcome {
        rotations: rots,
        cost,
        iterations,
        exhausted,
        history,
    }
}
