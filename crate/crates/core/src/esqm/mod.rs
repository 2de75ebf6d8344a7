//! Extended sequential quadratic method with an l-infinity slack penalty.
//!
//! Each iteration linearizes the constraints at `x_k`, allows a common slack
//! `s >= 0` priced at `beta_k`, and adds a proximal term with weight
//! `curvature_obj + beta_k * curvature_con`. The penalty grows by `delta`
//! whenever the new iterate violates some linearization at the target level.

mod homotopy;
mod lipschitz;
mod step;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{feasibility_residual, PerturbationSpec, ProblemInstance};
use crate::poly::Differentiated;

pub use homotopy::{homotopy_run, HomotopyLevel, HomotopyTrace, LevelStatus};
pub use lipschitz::{estimate_lipschitz, LipschitzEstimate, SAFETY_FACTOR};
pub use step::{esqm_step, EsqmStep};

/// Floor applied to estimated curvatures so the proximal weight stays positive.
pub const MIN_CURVATURE: f64 = 1e-3;
/// Relative tolerance of the linearized feasibility test in the penalty update.
const LINEAR_FEAS_TOL: f64 = 1e-12;
const MAX_RETRIES: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EsqmParams {
    pub alpha: f64,
    pub beta0: f64,
    pub delta: f64,
    pub curvature_obj: f64,
    pub curvature_con: f64,
    pub step_tol: f64,
    pub kkt_tol: f64,
    pub max_iter: usize,
    /// Lower bound on the objective used for the merit column; estimated
    /// from a grid over the sample box when absent.
    pub f_lower: Option<f64>,
    /// Restart with `beta0 * 10` (at most three times) when the penalty keeps
    /// growing until `max_iter`.
    pub retry_on_growth: bool,
}

impl EsqmParams {
    /// Defaults with curvatures estimated over the problem's sample box.
    pub fn for_problem(prob: &ProblemInstance, f: &Differentiated, alpha: f64) -> Result<Self> {
        let est = estimate_lipschitz(prob, Some(f), prob.sample_box(), 256, 0)?;
        Ok(EsqmParams {
            alpha,
            beta0: 10.0,
            delta: 1.0,
            curvature_obj: est.objective.max(MIN_CURVATURE),
            curvature_con: est.max_constraint().max(MIN_CURVATURE),
            step_tol: 1e-10,
            kkt_tol: 1e-8,
            max_iter: 5000,
            f_lower: None,
            retry_on_growth: true,
        })
    }

    fn validate(&self) -> Result<()> {
        let positive = [
            self.beta0,
            self.delta,
            self.curvature_obj,
            self.curvature_con,
            self.step_tol,
            self.kkt_tol,
        ];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) || !self.alpha.is_finite() {
            return Err(Error::InvalidParameter(
                "beta0, delta, curvatures and tolerances must be positive and finite".into(),
            ));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    Converged,
    MaxIter,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EsqmTrace {
    pub alpha: f64,
    /// `x_0, ..., x_K`.
    pub iterates: Vec<Vec<f64>>,
    /// `beta_0, ..., beta_K`.
    pub betas: Vec<f64>,
    /// `(f(x_k) - f_lower) / beta_k + max(0, max_i g_i(x_k) - bound_i)`.
    pub merits: Vec<f64>,
    /// Step `k` produces `x_{k+1}`; the following have length `K`.
    pub slacks: Vec<f64>,
    pub multipliers: Vec<Vec<f64>>,
    /// KKT residual at `x_{k+1}` with the step multipliers.
    pub kkt_residuals: Vec<f64>,
    pub step_norms: Vec<f64>,
    pub subproblem_residuals: Vec<f64>,
    pub termination: Termination,
    /// Index into `iterates` with the smallest KKT residual.
    pub best: usize,
    pub f_lower: f64,
    pub beta0_used: f64,
    pub retries: usize,
}

impl EsqmTrace {
    pub fn final_x(&self) -> &[f64] {
        self.iterates.last().expect("trace holds x_0")
    }

    pub fn final_multipliers(&self) -> Option<&[f64]> {
        self.multipliers.last().map(Vec::as_slice)
    }

    pub fn final_kkt(&self) -> f64 {
        self.kkt_residuals.last().copied().unwrap_or(f64::INFINITY)
    }

    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }

    /// Number of iterations after which `beta` no longer changes.
    pub fn beta_settled_at(&self) -> usize {
        let last = *self.betas.last().expect("nonempty");
        self.betas
            .iter()
            .rposition(|&b| b != last)
            .map_or(0, |i| i + 1)
    }

    /// Columns `k, x1..xn, s, beta, kkt_residual, merit`; `s` and the KKT
    /// residual are empty on row 0.
    pub fn to_csv(&self) -> String {
        let n = self.iterates[0].len();
        let mut out = String::from("k");
        for i in 0..n {
            out.push_str(&format!(",x{}", i + 1));
        }
        out.push_str(",s,beta,kkt_residual,merit\n");
        for (k, x) in self.iterates.iter().enumerate() {
            out.push_str(&k.to_string());
            for v in x {
                out.push_str(&format!(",{v:e}"));
            }
            let (s, kkt) = if k == 0 {
                (String::new(), String::new())
            } else {
                (
                    format!("{:e}", self.slacks[k - 1]),
                    format!("{:e}", self.kkt_residuals[k - 1]),
                )
            };
            out.push_str(&format!(
                ",{s},{:e},{kkt},{:e}\n",
                self.betas[k], self.merits[k]
            ));
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Unsupported(e.to_string()))
    }
}

/// `max(|grad f + sum lambda_i grad g_i|_inf, max_i |lambda_i (g_i - bound_i)|,
/// feasibility violation)`.
pub fn kkt_residual(
    prob: &ProblemInstance,
    f: &Differentiated,
    x: &[f64],
    lambda: &[f64],
    pert: &PerturbationSpec,
) -> Result<f64> {
    let m = prob.num_inequalities();
    if lambda.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: lambda.len(),
        });
    }
    let viol = feasibility_residual(prob, pert, x)?.max();
    let bounds = prob.bounds(pert)?;
    let mut grad = f.eval_grad(x);
    let mut comp = 0.0f64;
    for (i, &l) in lambda.iter().enumerate() {
        let g = prob.inequality(i);
        for (a, b) in grad.iter_mut().zip(g.eval_grad(x)) {
            *a += l * b;
        }
        comp = comp.max((l * (g.eval(x) - bounds[i])).abs());
    }
    let stat = grad.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    Ok(stat.max(comp).max(viol))
}

/// Grid minimum of `f` over `bx`, pushed down by a 10% margin.
pub fn crude_lower_bound(f: &Differentiated, bx: &[(f64, f64)]) -> f64 {
    let n = bx.len();
    let per_dim = ((1e5f64).powf(1.0 / n.max(1) as f64).floor() as usize).clamp(2, 201);
    let total = per_dim.saturating_pow(n as u32);
    let mut best = f64::INFINITY;
    let mut x = vec![0.0; n];
    for code in 0..total {
        let mut c = code;
        for (xi, &(lo, hi)) in x.iter_mut().zip(bx) {
            let t = (c % per_dim) as f64 / (per_dim - 1) as f64;
            c /= per_dim;
            *xi = lo + t * (hi - lo);
        }
        best = best.min(f.eval(&x));
    }
    best - 0.1 * best.abs()
}

fn merit(
    prob: &ProblemInstance,
    f: &Differentiated,
    bounds: &[f64],
    x: &[f64],
    beta: f64,
    f_lower: f64,
) -> f64 {
    let viol = (0..prob.num_inequalities())
        .map(|i| prob.inequality(i).eval(x) - bounds[i])
        .fold(0.0, f64::max);
    (f.eval(x) - f_lower) / beta + viol
}

fn single_run(
    prob: &ProblemInstance,
    f: &Differentiated,
    x0: &[f64],
    params: &EsqmParams,
    beta0: f64,
    f_lower: f64,
) -> Result<EsqmTrace> {
    let pert = PerturbationSpec::Diagonal(params.alpha);
    let bounds = prob.bounds(&pert)?;
    let mut trace = EsqmTrace {
        alpha: params.alpha,
        iterates: vec![x0.to_vec()],
        betas: vec![beta0],
        merits: vec![merit(prob, f, &bounds, x0, beta0, f_lower)],
        slacks: Vec::new(),
        multipliers: Vec::new(),
        kkt_residuals: Vec::new(),
        step_norms: Vec::new(),
        subproblem_residuals: Vec::new(),
        termination: Termination::MaxIter,
        best: 0,
        f_lower,
        beta0_used: beta0,
        retries: 0,
    };
    let mut x = x0.to_vec();
    let mut beta = beta0;
    let mut best_kkt = f64::INFINITY;
    for k in 0..params.max_iter {
        let st = esqm_step(prob, f, &x, params, beta)?;
        let scale = 1.0
            + (0..prob.num_inequalities())
                .map(|i| (prob.inequality(i).eval(&x) - bounds[i]).abs())
                .fold(0.0, f64::max);
        if st.linearized_violation > LINEAR_FEAS_TOL * scale {
            beta += params.delta;
        }
        let step = st
            .x_next
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let kkt = kkt_residual(prob, f, &st.x_next, &st.mu, &pert)?;
        x = st.x_next;
        trace
            .merits
            .push(merit(prob, f, &bounds, &x, beta, f_lower));
        trace.iterates.push(x.clone());
        trace.betas.push(beta);
        trace.slacks.push(st.s);
        trace.multipliers.push(st.mu);
        trace.kkt_residuals.push(kkt);
        trace.step_norms.push(step);
        trace.subproblem_residuals.push(st.subproblem_residual);
        if kkt < best_kkt {
            best_kkt = kkt;
            trace.best = k + 1;
        }
        if step <= params.step_tol && kkt <= params.kkt_tol {
            trace.termination = Termination::Converged;
            break;
        }
    }
    Ok(trace)
}

/// Penalty still growing during the last quarter of the run.
fn beta_unbounded(t: &EsqmTrace) -> bool {
    let k = t.betas.len();
    t.termination == Termination::MaxIter && t.betas[k - 1] > t.betas[k - 1 - (k - 1) / 4]
}

/// Runs the method from `x0`. A run that exhausts `max_iter` is returned
/// with `termination == MaxIter`; `best` points at the iterate with the
/// smallest KKT residual.
pub fn run_esqm(
    prob: &ProblemInstance,
    f: &Differentiated,
    x0: &[f64],
    params: &EsqmParams,
) -> Result<EsqmTrace> {
    params.validate()?;
    if x0.len() != prob.num_vars() {
        return Err(Error::DimensionMismatch {
            expected: prob.num_vars(),
            got: x0.len(),
        });
    }
    if prob.num_equalities() > 0 {
        return Err(Error::Unsupported(
            "ESQM handles inequality constraints only".into(),
        ));
    }
    let f_lower = params
        .f_lower
        .unwrap_or_else(|| crude_lower_bound(f, prob.sample_box()));
    let mut beta0 = params.beta0;
    let mut trace = single_run(prob, f, x0, params, beta0, f_lower)?;
    let mut retries = 0;
    while params.retry_on_growth && retries < MAX_RETRIES && beta_unbounded(&trace) {
        retries += 1;
        beta0 *= 10.0;
        trace = single_run(prob, f, x0, params, beta0, f_lower)?;
    }
    trace.retries = retries;
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{catalog, CatalogParams};
    use crate::poly::Polynomial;

    fn ball_box2() -> ProblemInstance {
        catalog(
            "ball_box",
            &CatalogParams {
                n: Some(2),
                a: Some(vec![0.4, 0.2]),
                ..Default::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn ball_box_corner() {
        let p = ball_box2();
        let f = p.objective().unwrap().clone();
        let params = EsqmParams::for_problem(&p, &f, 6.8).unwrap();
        let t = run_esqm(&p, &f, &[0.0, -0.9], &params).unwrap();
        assert!(t.converged(), "{:?}", t.termination);
        assert_eq!(t.beta_settled_at(), 0);
        let x = t.final_x();
        assert!(
            (x[0] + 1.0).abs() < 1e-6 && (x[1] + 1.0).abs() < 1e-6,
            "{x:?}"
        );
        let mu = t.final_multipliers().unwrap();
        assert!(mu[0].abs() < 1e-8 && (mu[1] - 0.5).abs() < 1e-6 && (mu[2] - 0.5).abs() < 1e-6);
        for w in t.merits.windows(2) {
            assert!(w[1] <= w[0] + 1e-9);
        }
    }

    #[test]
    fn cusp_vertex() {
        let p = catalog("cusp_boxed", &CatalogParams::default()).unwrap();
        let f = p.objective().unwrap().clone();
        let params = EsqmParams::for_problem(&p, &f, 0.1).unwrap();
        let t = run_esqm(&p, &f, &[0.0, 0.0], &params).unwrap();
        assert!(t.converged());
        let x = t.final_x();
        assert!(
            (x[0] - 0.1f64.cbrt()).abs() < 1e-6 && x[1].abs() < 1e-6,
            "{x:?}"
        );
    }

    #[test]
    fn infeasible_start_can_be_trapped() {
        // (0.9, 0.9) lies inside the excluded ball at level 6.8; the iterates
        // settle where the ball and box violations balance
        let p = ball_box2();
        let f = p.objective().unwrap().clone();
        let params = EsqmParams {
            max_iter: 300,
            retry_on_growth: false,
            ..EsqmParams::for_problem(&p, &f, 6.8).unwrap()
        };
        let t = run_esqm(&p, &f, &[0.9, 0.9], &params).unwrap();
        assert_eq!(t.termination, Termination::MaxIter);
        assert!(*t.slacks.last().unwrap() > 0.08);
        assert!(t.betas.last().unwrap() > &t.betas[0]);
    }

    #[test]
    fn interior_minimum_has_zero_multipliers() {
        let sq = |k: usize| {
            let t = &Polynomial::var(2, k) + &Polynomial::constant(2, 0.8);
            &t * &t
        };
        let f = Differentiated::new(&(&sq(0) + &sq(1)));
        let p = ball_box2();
        let params = EsqmParams::for_problem(&p, &f, 6.8).unwrap();
        let t = run_esqm(&p, &f, &[0.0, -0.9], &params).unwrap();
        assert!(t.converged());
        assert!((t.final_x()[0] + 0.8).abs() < 1e-7 && (t.final_x()[1] + 0.8).abs() < 1e-7);
        assert!(t.final_multipliers().unwrap().iter().all(|&m| m < 1e-10));
    }

    #[test]
    fn kkt_examples() {
        let p = ball_box2();
        let f = p.objective().unwrap();
        let pert = PerturbationSpec::Diagonal(6.8);
        assert!(kkt_residual(&p, f, &[-1.0, -1.0], &[0.0, 0.5, 0.5], &pert).unwrap() < 1e-15);
        // slack ball constraint: g0(-1,-1) = 4.6, bound 6.8
        let r = kkt_residual(&p, f, &[-1.0, -1.0], &[0.1, 0.5, 0.5], &pert).unwrap();
        assert!(r >= 0.1 * 2.2 - 1e-12);
    }

    #[test]
    fn csv_columns() {
        let p = ball_box2();
        let f = p.objective().unwrap().clone();
        let params = EsqmParams {
            max_iter: 3,
            ..EsqmParams::for_problem(&p, &f, 6.8).unwrap()
        };
        let t = run_esqm(&p, &f, &[0.9, 0.9], &params).unwrap();
        let csv = t.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "k,x1,x2,s,beta,kkt_residual,merit");
        assert_eq!(lines.count(), t.iterates.len());
    }

    #[test]
    fn rejects_bad_parameters() {
        let p = ball_box2();
        let f = p.objective().unwrap().clone();
        let mut params = EsqmParams::for_problem(&p, &f, 6.8).unwrap();
        params.delta = 0.0;
        assert!(run_esqm(&p, &f, &[0.0, 0.0], &params).is_err());
    }
}
