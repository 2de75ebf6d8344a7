use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ProblemInstance;
use crate::poly::Differentiated;

pub const SAFETY_FACTOR: f64 = 1.5;
/// Box vertices are added to the random samples up to this dimension.
const MAX_VERTEX_DIM: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzEstimate {
    /// Objective gradient constant; zero without an objective.
    pub objective: f64,
    pub constraints: Vec<f64>,
}

impl LipschitzEstimate {
    pub fn max_constraint(&self) -> f64 {
        self.constraints.iter().copied().fold(0.0, f64::max)
    }
}

fn spectral_norm(h: &[Vec<f64>]) -> f64 {
    let n = h.len();
    if n == 0 {
        return 0.0;
    }
    let m = DMatrix::from_fn(n, n, |i, j| 0.5 * (h[i][j] + h[j][i]));
    SymmetricEigen::new(m)
        .eigenvalues
        .iter()
        .fold(0.0f64, |a, v| a.max(v.abs()))
}

fn box_points(bx: &[(f64, f64)], samples: usize, seed: u64) -> Vec<Vec<f64>> {
    let n = bx.len();
    let mut pts = Vec::new();
    if n <= MAX_VERTEX_DIM {
        for code in 0..(1usize << n) {
            pts.push(
                bx.iter()
                    .enumerate()
                    .map(|(k, &(lo, hi))| if code >> k & 1 == 1 { hi } else { lo })
                    .collect(),
            );
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        pts.push(
            bx.iter()
                .map(|&(lo, hi)| rng.random_range(lo..=hi))
                .collect(),
        );
    }
    pts
}

fn max_hessian_norm(p: &Differentiated, pts: &[Vec<f64>]) -> f64 {
    pts.iter()
        .map(|x| spectral_norm(&p.eval_hess(x)))
        .fold(0.0, f64::max)
}

/// Largest Hessian spectral norm over the box vertices and `samples` random
/// points, times [`SAFETY_FACTOR`].
pub fn estimate_lipschitz(
    prob: &ProblemInstance,
    f: Option<&Differentiated>,
    bx: &[(f64, f64)],
    samples: usize,
    seed: u64,
) -> Result<LipschitzEstimate> {
    if bx.len() != prob.num_vars() {
        return Err(Error::DimensionMismatch {
            expected: prob.num_vars(),
            got: bx.len(),
        });
    }
    if bx
        .iter()
        .any(|&(lo, hi)| !(lo.is_finite() && hi.is_finite()) || lo > hi)
    {
        return Err(Error::InvalidParameter(
            "box must be bounded and nonempty".into(),
        ));
    }
    let pts = box_points(bx, samples, seed);
    Ok(LipschitzEstimate {
        objective: f.map_or(0.0, |f| SAFETY_FACTOR * max_hessian_norm(f, &pts)),
        constraints: (0..prob.num_inequalities())
            .map(|i| SAFETY_FACTOR * max_hessian_norm(prob.inequality(i), &pts))
            .collect(),
    })
}
