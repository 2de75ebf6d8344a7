//! Concave quadratic maximization over the capped simplex
//! `{mu >= 0, sum(mu) <= beta}`.
//!
//! Projected gradient ascent with a monotone backtracking line search. Every
//! few iterations the current support is polished by solving the KKT system
//! restricted to that face; the polish is kept only when it stays on the face
//! and does not lower the objective.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::Status;
use crate::error::{Error, Result};

pub const MAX_ITER: usize = 10_000;
const POLISH_EVERY: usize = 10;

#[derive(Clone, Debug, PartialEq)]
pub struct CappedSimplexQp {
    /// Symmetric negative semidefinite.
    pub quad: Vec<Vec<f64>>,
    pub lin: Vec<f64>,
    pub beta: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QpSolution {
    pub status: Status,
    pub objective: f64,
    pub mu: Vec<f64>,
    /// Multiplier of the cap `sum(mu) <= beta`.
    pub cap_multiplier: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
}

impl CappedSimplexQp {
    pub fn dim(&self) -> usize {
        self.lin.len()
    }

    pub fn objective(&self, mu: &[f64]) -> f64 {
        let mut v = 0.0;
        for (i, row) in self.quad.iter().enumerate() {
            let qi: f64 = row.iter().zip(mu).map(|(a, b)| a * b).sum();
            v += 0.5 * mu[i] * qi + self.lin[i] * mu[i];
        }
        v
    }

    pub fn gradient(&self, mu: &[f64]) -> Vec<f64> {
        self.quad
            .iter()
            .zip(&self.lin)
            .map(|(row, l)| row.iter().zip(mu).map(|(a, b)| a * b).sum::<f64>() + l)
            .collect()
    }

    /// `|mu - P(mu + grad)|_inf`, zero exactly at the maximizers.
    pub fn kkt_residual(&self, mu: &[f64]) -> f64 {
        let g = self.gradient(mu);
        let step: Vec<f64> = mu.iter().zip(&g).map(|(m, gi)| m + gi).collect();
        let p = project_capped_simplex(&step, self.beta).expect("beta validated");
        mu.iter()
            .zip(&p)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    fn validate(&self) -> Result<f64> {
        let k = self.dim();
        if self.quad.len() != k || self.quad.iter().any(|r| r.len() != k) {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: self.quad.len(),
            });
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(Error::InvalidParameter(
                "cap beta must be finite and nonnegative".into(),
            ));
        }
        if self
            .lin
            .iter()
            .chain(self.quad.iter().flatten())
            .any(|v| !v.is_finite())
        {
            return Err(Error::NonFinite);
        }
        let scale = self
            .quad
            .iter()
            .flatten()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(1.0);
        for i in 0..k {
            for j in 0..i {
                if (self.quad[i][j] - self.quad[j][i]).abs() > 1e-12 * scale {
                    return Err(Error::InvalidParameter(
                        "quadratic term is not symmetric".into(),
                    ));
                }
            }
        }
        if k == 0 {
            return Ok(0.0);
        }
        let m = DMatrix::from_fn(k, k, |i, j| self.quad[i][j]);
        let eig = SymmetricEigen::new(m);
        let top = eig.eigenvalues.max();
        if top > 1e-10 * scale {
            return Err(Error::IndefiniteQuadratic(top));
        }
        // curvature of the ascent direction
        Ok(-eig.eigenvalues.min())
    }
}

/// Euclidean projection onto `{mu >= 0, sum(mu) <= beta}`.
pub fn project_capped_simplex(v: &[f64], beta: f64) -> Result<Vec<f64>> {
    if !(beta >= 0.0) {
        return Err(Error::InvalidParameter(
            "cap beta must be nonnegative".into(),
        ));
    }
    let clipped: Vec<f64> = v.iter().map(|&x| x.max(0.0)).collect();
    if clipped.iter().sum::<f64>() <= beta {
        return Ok(clipped);
    }
    // sum is active: project onto {mu >= 0, sum = beta}
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cum += uj;
        let t = (cum - beta) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        } else {
            break;
        }
    }
    Ok(v.iter().map(|&x| (x - theta).max(0.0)).collect())
}

pub fn solve_capped_simplex_qp(qp: &CappedSimplexQp, tol: f64) -> Result<QpSolution> {
    let curvature = qp.validate()?;
    let k = qp.dim();
    if k == 0 {
        return Ok(QpSolution {
            status: Status::Optimal,
            objective: 0.0,
            mu: Vec::new(),
            cap_multiplier: 0.0,
            kkt_residual: 0.0,
            iterations: 0,
        });
    }
    let beta = qp.beta;
    let base_step = if curvature > 0.0 {
        1.0 / curvature
    } else {
        1.0
    };

    let mut mu = vec![0.0; k];
    let mut obj = qp.objective(&mu);
    let mut iterations = 0;
    let mut res = qp.kkt_residual(&mu);

    while res > tol && iterations < MAX_ITER {
        iterations += 1;
        let g = qp.gradient(&mu);
        let mut t = base_step;
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<f64> = mu.iter().zip(&g).map(|(m, gi)| m + t * gi).collect();
            let p = project_capped_simplex(&trial, beta)?;
            let po = qp.objective(&p);
            if po >= obj - 1e-15 * obj.abs().max(1.0) {
                mu = p;
                obj = po;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
        if iterations % POLISH_EVERY == 0 || iterations == 1 {
            if let Some(p) = polish(qp, &mu) {
                let po = qp.objective(&p);
                if po >= obj - 1e-14 * obj.abs().max(1.0)
                    && qp.kkt_residual(&p) <= qp.kkt_residual(&mu)
                {
                    mu = p;
                    obj = po;
                }
            }
        }
        res = qp.kkt_residual(&mu);
    }
    if res > tol {
        if let Some(p) = polish(qp, &mu) {
            if qp.kkt_residual(&p) < res {
                mu = p;
                obj = qp.objective(&mu);
                res = qp.kkt_residual(&mu);
            }
        }
    }

    let g = qp.gradient(&mu);
    let cap_multiplier = if mu.iter().sum::<f64>() >= beta - 1e-12 * beta.max(1.0) {
        mu.iter()
            .zip(&g)
            .filter(|(m, _)| **m > 0.0)
            .map(|(_, gi)| *gi)
            .fold(f64::NEG_INFINITY, f64::max)
            .max(0.0)
    } else {
        0.0
    };
    Ok(QpSolution {
        status: if res <= tol {
            Status::Optimal
        } else {
            Status::IterLimit
        },
        objective: obj,
        mu,
        cap_multiplier,
        kkt_residual: res,
        iterations,
    })
}

/// Solves the KKT system on the face spanned by the support of `mu`.
fn polish(qp: &CappedSimplexQp, mu: &[f64]) -> Option<Vec<f64>> {
    let support: Vec<usize> = (0..mu.len()).filter(|&i| mu[i] > 0.0).collect();
    if support.is_empty() {
        return None;
    }
    let s = support.len();
    let beta = qp.beta;
    let cap_active = mu.iter().sum::<f64>() >= beta * (1.0 - 1e-12) - 1e-15;
    let dim = if cap_active { s + 1 } else { s };
    let mut a = DMatrix::<f64>::zeros(dim, dim);
    let mut rhs = DVector::<f64>::zeros(dim);
    for (r, &i) in support.iter().enumerate() {
        for (c, &j) in support.iter().enumerate() {
            a[(r, c)] = qp.quad[i][j];
        }
        rhs[r] = -qp.lin[i];
        if cap_active {
            a[(r, s)] = -1.0;
            a[(s, r)] = 1.0;
        }
    }
    if cap_active {
        rhs[s] = beta;
    }
    let svd = a.svd(true, true);
    let sol = svd.solve(&rhs, 1e-12).ok()?;
    let mut out = vec![0.0; mu.len()];
    for (r, &i) in support.iter().enumerate() {
        if !(sol[r] >= 0.0) || !sol[r].is_finite() {
            return None;
        }
        out[i] = sol[r];
    }
    if cap_active && sol[s] < -1e-12 {
        return None;
    }
    let total: f64 = out.iter().sum();
    if total > beta {
        let f = beta / total;
        out.iter_mut().for_each(|v| *v *= f);
    }
    Some(out)
}
