//! The witness system for a pair of index sets `K ⊆ L`.
//!
//! Unknowns are packed as `z = (x, lambda_K, kappa, alpha)`. Rows:
//!
//! * `sum_{i in K} lambda_i grad g_i(x) - sum_j kappa_j grad h_j(x)` (n rows)
//! * `sum lambda - 1`
//! * `g_l(x) - alpha` for perturbable `l in L`, `g_l(x)` otherwise
//! * `h_j(x)`

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ProblemInstance;
use crate::poly::Differentiated;

#[derive(Clone, Debug)]
pub struct SingularSystem {
    n: usize,
    k: Vec<usize>,
    l: Vec<usize>,
    k_funcs: Vec<Differentiated>,
    /// `(g_l, perturbable)` for `l in L`.
    l_funcs: Vec<(Differentiated, bool)>,
    /// `(g_l, perturbable)` for the constraints outside `L`.
    others: Vec<(usize, Differentiated, bool)>,
    eqs: Vec<Differentiated>,
}

/// A point `(x, lambda, kappa, alpha)` of a [`SingularSystem`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Unpacked {
    pub x: Vec<f64>,
    pub lambda: Vec<f64>,
    pub kappa: Vec<f64>,
    pub alpha: f64,
}

/// Builds the witness system. `k` and `l` hold zero-based inequality indices.
pub fn build_singular_system(
    prob: &ProblemInstance,
    k: &[usize],
    l: &[usize],
) -> Result<SingularSystem> {
    let m = prob.num_inequalities();
    let mut k = k.to_vec();
    let mut l = l.to_vec();
    k.sort_unstable();
    k.dedup();
    l.sort_unstable();
    l.dedup();
    if let Some(&bad) = l.iter().chain(&k).find(|&&i| i >= m) {
        return Err(Error::InvalidParameter(format!(
            "constraint index {} out of range (m = {m})",
            bad + 1
        )));
    }
    if let Some(&bad) = k.iter().find(|i| !l.contains(i)) {
        return Err(Error::InvalidParameter(format!(
            "K must be a subset of L; {} is missing from L",
            bad + 1
        )));
    }
    if !k.iter().any(|&i| prob.is_perturbable(i)) {
        return Err(Error::InvalidParameter(
            "K must contain a perturbable constraint".into(),
        ));
    }
    Ok(SingularSystem {
        n: prob.num_vars(),
        k_funcs: k.iter().map(|&i| prob.inequality(i).clone()).collect(),
        l_funcs: l
            .iter()
            .map(|&i| (prob.inequality(i).clone(), prob.is_perturbable(i)))
            .collect(),
        others: (0..m)
            .filter(|i| !l.contains(i))
            .map(|i| (i, prob.inequality(i).clone(), prob.is_perturbable(i)))
            .collect(),
        eqs: (0..prob.num_equalities())
            .map(|j| prob.equality(j).clone())
            .collect(),
        k,
        l,
    })
}

impl SingularSystem {
    pub fn k(&self) -> &[usize] {
        &self.k
    }

    pub fn l(&self) -> &[usize] {
        &self.l
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub fn num_equations(&self) -> usize {
        self.n + 1 + self.l.len() + self.eqs.len()
    }

    pub fn num_unknowns(&self) -> usize {
        self.n + self.k.len() + self.eqs.len() + 1
    }

    pub fn pack(&self, x: &[f64], lambda: &[f64], kappa: &[f64], alpha: f64) -> Vec<f64> {
        let mut z = Vec::with_capacity(self.num_unknowns());
        z.extend_from_slice(x);
        z.extend_from_slice(lambda);
        z.extend_from_slice(kappa);
        z.push(alpha);
        z
    }

    pub fn unpack(&self, z: &[f64]) -> Unpacked {
        let (n, kk, r) = (self.n, self.k.len(), self.eqs.len());
        Unpacked {
            x: z[..n].to_vec(),
            lambda: z[n..n + kk].to_vec(),
            kappa: z[n + kk..n + kk + r].to_vec(),
            alpha: z[n + kk + r],
        }
    }

    pub fn residual(&self, z: &[f64]) -> Vec<f64> {
        let u = self.unpack(z);
        let mut out = vec![0.0; self.n];
        for (g, &lam) in self.k_funcs.iter().zip(&u.lambda) {
            for (o, gk) in out.iter_mut().zip(g.eval_grad(&u.x)) {
                *o += lam * gk;
            }
        }
        for (h, &kap) in self.eqs.iter().zip(&u.kappa) {
            for (o, hk) in out.iter_mut().zip(h.eval_grad(&u.x)) {
                *o -= kap * hk;
            }
        }
        out.push(u.lambda.iter().sum::<f64>() - 1.0);
        for (g, pert) in &self.l_funcs {
            let v = g.eval(&u.x);
            out.push(if *pert { v - u.alpha } else { v });
        }
        out.extend(self.eqs.iter().map(|h| h.eval(&u.x)));
        out
    }

    pub fn jacobian(&self, z: &[f64]) -> DMatrix<f64> {
        let u = self.unpack(z);
        let (n, kk, r) = (self.n, self.k.len(), self.eqs.len());
        let col_alpha = n + kk + r;
        let mut j = DMatrix::zeros(self.num_equations(), self.num_unknowns());
        for (c, (g, &lam)) in self.k_funcs.iter().zip(&u.lambda).enumerate() {
            let grad = g.eval_grad(&u.x);
            let hess = g.eval_hess(&u.x);
            for row in 0..n {
                for col in 0..n {
                    j[(row, col)] += lam * hess[row][col];
                }
                j[(row, n + c)] = grad[row];
            }
        }
        for (c, (h, &kap)) in self.eqs.iter().zip(&u.kappa).enumerate() {
            let grad = h.eval_grad(&u.x);
            let hess = h.eval_hess(&u.x);
            for row in 0..n {
                for col in 0..n {
                    j[(row, col)] -= kap * hess[row][col];
                }
                j[(row, n + kk + c)] = -grad[row];
            }
        }
        for c in 0..kk {
            j[(n, n + c)] = 1.0;
        }
        for (t, (g, pert)) in self.l_funcs.iter().enumerate() {
            let row = n + 1 + t;
            for (col, v) in g.eval_grad(&u.x).into_iter().enumerate() {
                j[(row, col)] = v;
            }
            if *pert {
                j[(row, col_alpha)] = -1.0;
            }
        }
        for (t, h) in self.eqs.iter().enumerate() {
            let row = n + 1 + self.l.len() + t;
            for (col, v) in h.eval_grad(&u.x).into_iter().enumerate() {
                j[(row, col)] = v;
            }
        }
        j
    }

    /// Smallest `bound_l - g_l(x)` over the constraints outside `L`
    /// (`+inf` when `L` covers everything).
    pub fn min_outside_slack(&self, x: &[f64], alpha: f64) -> f64 {
        self.others
            .iter()
            .map(|(_, g, pert)| (if *pert { alpha } else { 0.0 }) - g.eval(x))
            .fold(f64::INFINITY, f64::min)
    }
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}
