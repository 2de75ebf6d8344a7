//! One proximal-linearized step, solved through its dual.
//!
//! With `c_i = g_i(x_k) - bound_i`, `G` the constraint Jacobian and
//! `rho = curvature_obj + beta * curvature_con`, the subproblem
//!
//! ```text
//! min_{d,s}  <grad f, d> + beta s + rho/2 |d|^2   s.t.  c + G d <= s,  s >= 0
//! ```
//!
//! has the dual `max ½ muᵀ(-G Gᵀ/rho) mu + (c - G grad f / rho)ᵀ mu` over
//! `{mu >= 0, sum mu <= beta}`, and `d = -(grad f + Gᵀ mu) / rho`.

use serde::{Deserialize, Serialize};

use super::EsqmParams;
use crate::convexsolve::{solve_capped_simplex_qp, CappedSimplexQp, Status};
use crate::error::{Error, Result};
use crate::model::{PerturbationSpec, ProblemInstance};
use crate::poly::Differentiated;

const QP_TOL: f64 = 1e-12;
const QP_ACCEPT: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EsqmStep {
    pub x_next: Vec<f64>,
    pub s: f64,
    pub mu: Vec<f64>,
    pub rho: f64,
    /// `max_i (c_i + <G_i, d>)`, the largest linearized violation at `x_next`.
    pub linearized_violation: f64,
    /// Subproblem objective at `(x_next, s)`.
    pub objective: f64,
    /// Subproblem objective at `(x_k, max(0, max c_i))`.
    pub reference_objective: f64,
    /// Relative primal-dual gap of the subproblem.
    pub subproblem_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn esqm_step(
    prob: &ProblemInstance,
    f: &Differentiated,
    xk: &[f64],
    params: &EsqmParams,
    beta: f64,
) -> Result<EsqmStep> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidParameter(
            "penalty beta must be positive".into(),
        ));
    }
    let n = prob.num_vars();
    if xk.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: xk.len(),
        });
    }
    let bounds = prob.bounds(&PerturbationSpec::Diagonal(params.alpha))?;
    let m = prob.num_inequalities();
    let rho = params.curvature_obj + beta * params.curvature_con;
    let gf = f.eval_grad(xk);
    let c: Vec<f64> = (0..m)
        .map(|i| prob.inequality(i).eval(xk) - bounds[i])
        .collect();
    let gm: Vec<Vec<f64>> = (0..m).map(|i| prob.inequality(i).eval_grad(xk)).collect();

    let quad = (0..m)
        .map(|i| (0..m).map(|j| -dot(&gm[i], &gm[j]) / rho).collect())
        .collect();
    let lin = (0..m).map(|i| c[i] - dot(&gm[i], &gf) / rho).collect();
    let qp = CappedSimplexQp { quad, lin, beta };
    let sol = solve_capped_simplex_qp(&qp, QP_TOL)?;
    if sol.status != Status::Optimal && !(sol.kkt_residual <= QP_ACCEPT) {
        return Err(Error::Subproblem(format!(
            "dual QP stopped with {:?}, residual {:e}",
            sol.status, sol.kkt_residual
        )));
    }
    let mu = sol.mu;

    let mut w = gf.clone();
    for (g, &mi) in gm.iter().zip(&mu) {
        for (wk, gk) in w.iter_mut().zip(g) {
            *wk += mi * gk;
        }
    }
    let d: Vec<f64> = w.iter().map(|v| -v / rho).collect();
    let linearized_violation = (0..m)
        .map(|i| c[i] + dot(&gm[i], &d))
        .fold(f64::NEG_INFINITY, f64::max);
    let s = linearized_violation.max(0.0);
    let dd = dot(&d, &d);
    let objective = dot(&gf, &d) + beta * s + 0.5 * rho * dd;
    let reference_objective = beta * c.iter().copied().fold(0.0, f64::max);
    let dual = dot(&mu, &c) - dot(&w, &w) / (2.0 * rho);
    let subproblem_residual = (objective - dual).abs() / (1.0 + objective.abs());

    Ok(EsqmStep {
        x_next: xk.iter().zip(&d).map(|(a, b)| a + b).collect(),
        s,
        mu,
        rho,
        linearized_violation,
        objective,
        reference_objective,
        subproblem_residual,
    })
}
