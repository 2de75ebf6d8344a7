//! Pointwise Mangasarian-Fromovitz certification.
//!
//! Two independent formulations are provided. The LP form looks for a
//! direction `y` with `<grad g_i, y> <= -eps` on the active set, tangent to
//! the equalities, `|y|_inf <= 1`, and maximizes `eps`. The hull form measures
//! the distance from the origin to the convex hull of the active gradients
//! after projecting out the span of the equality gradients. MFCQ holds iff
//! that distance is positive.
//!
//! Both return a [`MfcqCertificate`]. The verdict is banded on the margin
//! (`eps*` for the LP, the hull distance for the hull form):
//!
//! * `margin > tol` gives [`Verdict::Holds`],
//! * `margin <= fail_tol` gives [`Verdict::Fails`],
//! * anything in between is [`Verdict::Degenerate`] and is not decided.

mod sweep;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::convexsolve::{solve_capped_simplex_qp, solve_lp, CappedSimplexQp, LpProblem, Status};
use crate::error::{Error, Result};
use crate::model::{active_set, ActiveSet, PerturbationSpec, ProblemInstance, DEFAULT_TAU_ACT};

pub use sweep::{sweep_mfcq, SweepConfig, SweepPoint, SweepReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Holds,
    Fails,
    Degenerate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Lp,
    Hull,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MfcqTolerances {
    pub tau_act: f64,
    pub tol: f64,
    pub fail_tol: f64,
    pub tol_rank: f64,
}

impl Default for MfcqTolerances {
    fn default() -> Self {
        MfcqTolerances {
            tau_act: DEFAULT_TAU_ACT,
            tol: 1e-9,
            fail_tol: 1e-12,
            tol_rank: 1e-10,
        }
    }
}

impl MfcqTolerances {
    fn band(&self, margin: f64) -> Verdict {
        if margin > self.tol {
            Verdict::Holds
        } else if margin <= self.fail_tol {
            Verdict::Fails
        } else {
            Verdict::Degenerate
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MfcqCertificate {
    pub method: Method,
    pub verdict: Verdict,
    /// Separating direction, `|y|_inf <= 1`. Present when the verdict is `Holds`.
    pub direction: Option<Vec<f64>>,
    /// `eps*` for the LP form, the hull distance for the hull form.
    /// `+inf` when the active set is empty.
    pub margin: f64,
    /// Hull weights over `active_set.indices`, summing to one.
    pub lambda: Vec<f64>,
    /// Equality coefficients: `sum lambda_i grad g_i - sum kappa_j grad h_j` is
    /// the hull residual.
    pub kappa: Vec<f64>,
    pub hull_distance: f64,
    pub active_set: ActiveSet,
    pub tolerances: MfcqTolerances,
    pub reason: Option<String>,
}

impl MfcqCertificate {
    /// Recomputes `|sum lambda_i grad g_i(x) - sum kappa_j grad h_j(x)|_2`.
    pub fn replay_residual(&self, prob: &ProblemInstance, x: &[f64]) -> f64 {
        let n = prob.num_vars();
        let mut v = vec![0.0; n];
        for (&i, &l) in self.active_set.indices.iter().zip(&self.lambda) {
            for (vk, gk) in v.iter_mut().zip(prob.inequality(i).eval_grad(x)) {
                *vk += l * gk;
            }
        }
        for (j, &k) in self.kappa.iter().enumerate() {
            for (vk, hk) in v.iter_mut().zip(prob.equality(j).eval_grad(x)) {
                *vk -= k * hk;
            }
        }
        norm2(&v)
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn gradient_rows<'a>(
    prob: &'a ProblemInstance,
    x: &'a [f64],
    idx: impl Iterator<Item = usize> + 'a,
    eq: bool,
) -> Vec<Vec<f64>> {
    idx.map(|i| {
        if eq {
            prob.equality(i).eval_grad(x)
        } else {
            prob.inequality(i).eval_grad(x)
        }
    })
    .collect()
}

/// True iff the `r x n` matrix of equality gradients at `x` has numerical
/// rank `r`.
pub fn equality_gradients_independent(
    prob: &ProblemInstance,
    x: &[f64],
    tol_rank: f64,
) -> Result<bool> {
    if x.len() != prob.num_vars() {
        return Err(Error::DimensionMismatch {
            expected: prob.num_vars(),
            got: x.len(),
        });
    }
    let r = prob.num_equalities();
    let n = prob.num_vars();
    if r == 0 {
        return Ok(true);
    }
    if r > n {
        return Ok(false);
    }
    let rows = gradient_rows(prob, x, 0..r, true);
    let m = DMatrix::from_fn(r, n, |i, j| rows[i][j]);
    let sv = m.singular_values();
    let max = sv.max();
    Ok(max > 0.0 && sv.min() / max > tol_rank)
}

/// Unit null vector of the equality gradients, certifying their dependence.
fn equality_null_combination(prob: &ProblemInstance, x: &[f64]) -> Vec<f64> {
    let r = prob.num_equalities();
    let n = prob.num_vars();
    let rows = gradient_rows(prob, x, 0..r, true);
    // left null vector of the r x n matrix = null vector of its n x r transpose
    let mt = DMatrix::from_fn(n.max(r), r, |i, j| if i < n { rows[j][i] } else { 0.0 });
    let svd = mt.svd(false, true);
    let v_t = svd.v_t.expect("requested");
    let (k, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold(
            (0, f64::INFINITY),
            |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc },
        );
    (0..r).map(|j| v_t[(k, j)]).collect()
}

struct Prelude {
    active: ActiveSet,
    dependent: Option<Vec<f64>>,
}

fn prelude(
    prob: &ProblemInstance,
    pert: &PerturbationSpec,
    x: &[f64],
    tols: &MfcqTolerances,
) -> Result<Prelude> {
    let active = active_set(prob, pert, x, tols.tau_act)?;
    let dependent = if equality_gradients_independent(prob, x, tols.tol_rank)? {
        None
    } else {
        Some(equality_null_combination(prob, x))
    };
    Ok(Prelude { active, dependent })
}

fn dependent_certificate(
    method: Method,
    active: ActiveSet,
    kappa: Vec<f64>,
    tols: MfcqTolerances,
) -> MfcqCertificate {
    MfcqCertificate {
        method,
        verdict: Verdict::Fails,
        direction: None,
        margin: 0.0,
        lambda: Vec::new(),
        kappa,
        hull_distance: 0.0,
        active_set: active,
        tolerances: tols,
        reason: Some("equality constraint gradients are linearly dependent".into()),
    }
}

fn empty_active_certificate(
    method: Method,
    n: usize,
    r: usize,
    active: ActiveSet,
    tols: MfcqTolerances,
) -> MfcqCertificate {
    MfcqCertificate {
        method,
        verdict: Verdict::Holds,
        direction: Some(vec![0.0; n]),
        margin: f64::INFINITY,
        lambda: Vec::new(),
        kappa: vec![0.0; r],
        hull_distance: f64::INFINITY,
        active_set: active,
        tolerances: tols,
        reason: None,
    }
}

pub fn check_mfcq_lp(
    prob: &ProblemInstance,
    pert: &PerturbationSpec,
    x: &[f64],
    tols: &MfcqTolerances,
) -> Result<MfcqCertificate> {
    let Prelude { active, dependent } = prelude(prob, pert, x, tols)?;
    if let Some(kappa) = dependent {
        return Ok(dependent_certificate(Method::Lp, active, kappa, *tols));
    }
    let n = prob.num_vars();
    let r = prob.num_equalities();
    if active.indices.is_empty() {
        return Ok(empty_active_certificate(Method::Lp, n, r, active, *tols));
    }

    // variables (y_1..y_n, eps); minimize -eps
    let mut c = vec![0.0; n + 1];
    c[n] = -1.0;
    let mut lp = LpProblem::new(c);
    for k in 0..n {
        lp = lp.bounds(k, -1.0, 1.0);
    }
    lp = lp.bounds(n, f64::NEG_INFINITY, f64::INFINITY);
    for g in gradient_rows(prob, x, active.indices.iter().copied(), false) {
        let mut row = g;
        row.push(1.0);
        lp = lp.leq(row, 0.0);
    }
    for h in gradient_rows(prob, x, 0..r, true) {
        let mut row = h;
        row.push(0.0);
        lp = lp.eq(row, 0.0);
    }
    let sol = solve_lp(&lp, tols.fail_tol)?;
    if sol.status != Status::Optimal {
        return Err(Error::Subproblem(format!(
            "MFCQ LP ended with {:?}",
            sol.status
        )));
    }
    let eps = sol.x[n].max(0.0);
    let total: f64 = sol.ineq_duals.iter().sum();
    let lambda: Vec<f64> = if total > 0.0 {
        sol.ineq_duals.iter().map(|u| u / total).collect()
    } else {
        vec![1.0 / active.indices.len() as f64; active.indices.len()]
    };
    let kappa: Vec<f64> = sol.eq_duals.iter().map(|v| -v).collect();
    let verdict = tols.band(eps);
    let mut cert = MfcqCertificate {
        method: Method::Lp,
        verdict,
        direction: (verdict == Verdict::Holds).then(|| sol.x[..n].to_vec()),
        margin: eps,
        lambda,
        kappa,
        hull_distance: f64::NAN,
        active_set: active,
        tolerances: *tols,
        reason: None,
    };
    cert.hull_distance = cert.replay_residual(prob, x);
    Ok(cert)
}

/// Orthonormal basis (as rows) of the span of `rows`.
fn span_basis(rows: &[Vec<f64>], n: usize) -> Vec<Vec<f64>> {
    if rows.is_empty() {
        return Vec::new();
    }
    let r = rows.len();
    let m = DMatrix::from_fn(n, r, |i, j| rows[j][i]);
    let svd = m.svd(true, false);
    let u = svd.u.expect("requested");
    let smax = svd.singular_values.max();
    svd.singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > 1e-12 * smax.max(1e-300))
        .map(|(k, _)| (0..n).map(|i| u[(i, k)]).collect())
        .collect()
}

fn project_out(v: &[f64], basis: &[Vec<f64>]) -> Vec<f64> {
    let mut out = v.to_vec();
    for b in basis {
        let c: f64 = b.iter().zip(v).map(|(a, c)| a * c).sum();
        for (o, bi) in out.iter_mut().zip(b) {
            *o -= c * bi;
        }
    }
    out
}

/// Minimizes `|P sum lambda_i g_i|` over the unit simplex, `P` projecting onto
/// the orthogonal complement of `span(eq_rows)`. Returns `(lambda, P v*)`.
pub(crate) fn min_norm_hull(
    gs: &[Vec<f64>],
    eq_rows: &[Vec<f64>],
    n: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let basis = span_basis(eq_rows, n);
    let proj: Vec<Vec<f64>> = gs.iter().map(|g| project_out(g, &basis)).collect();
    let k = proj.len();
    let gram: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| proj[i].iter().zip(&proj[j]).map(|(a, b)| a * b).sum())
                .collect()
        })
        .collect();
    let gmax = gram.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    // a linear reward larger than any gradient of the quadratic keeps the
    // cap sum(lambda) <= 1 active, turning the capped simplex into the unit simplex
    let shift = 2.0 * gmax + 1.0;
    let qp = CappedSimplexQp {
        quad: gram
            .iter()
            .map(|r| r.iter().map(|v| -2.0 * v).collect())
            .collect(),
        lin: vec![shift; k],
        beta: 1.0,
    };
    let sol = solve_capped_simplex_qp(&qp, 1e-13 * shift)?;
    let total: f64 = sol.mu.iter().sum();
    let lambda: Vec<f64> = if total > 0.0 {
        sol.mu.iter().map(|m| m / total).collect()
    } else {
        vec![1.0 / k as f64; k]
    };
    let mut v = vec![0.0; n];
    for (l, p) in lambda.iter().zip(&proj) {
        for (vi, pi) in v.iter_mut().zip(p) {
            *vi += l * pi;
        }
    }
    Ok((lambda, v))
}

/// Least-squares `kappa` with `sum kappa_j h_j ~ target`.
fn fit_kappa(target: &[f64], eq_rows: &[Vec<f64>], n: usize) -> Vec<f64> {
    let r = eq_rows.len();
    if r == 0 {
        return Vec::new();
    }
    let m = DMatrix::from_fn(n, r, |i, j| eq_rows[j][i]);
    let b = nalgebra::DVector::from_column_slice(target);
    match m.svd(true, true).solve(&b, 1e-14) {
        Ok(k) => k.iter().copied().collect(),
        Err(_) => vec![0.0; r],
    }
}

pub fn check_mfcq_hull(
    prob: &ProblemInstance,
    pert: &PerturbationSpec,
    x: &[f64],
    tols: &MfcqTolerances,
) -> Result<MfcqCertificate> {
    let Prelude { active, dependent } = prelude(prob, pert, x, tols)?;
    if let Some(kappa) = dependent {
        return Ok(dependent_certificate(Method::Hull, active, kappa, *tols));
    }
    let n = prob.num_vars();
    let r = prob.num_equalities();
    if active.indices.is_empty() {
        return Ok(empty_active_certificate(Method::Hull, n, r, active, *tols));
    }
    let gs = gradient_rows(prob, x, active.indices.iter().copied(), false);
    let hs = gradient_rows(prob, x, 0..r, true);
    let (lambda, v) = min_norm_hull(&gs, &hs, n)?;
    let dist = norm2(&v);

    let mut combo = vec![0.0; n];
    for (l, g) in lambda.iter().zip(&gs) {
        for (c, gi) in combo.iter_mut().zip(g) {
            *c += l * gi;
        }
    }
    let kappa = fit_kappa(&combo, &hs, n);
    let verdict = tols.band(dist);
    let direction = (verdict == Verdict::Holds).then(|| {
        let vmax = v.iter().fold(0.0f64, |m, a| m.max(a.abs()));
        v.iter().map(|a| -a / vmax).collect()
    });
    Ok(MfcqCertificate {
        method: Method::Hull,
        verdict,
        direction,
        margin: dist,
        lambda,
        kappa,
        hull_distance: dist,
        active_set: active,
        tolerances: *tols,
        reason: None,
    })
}
