//! Singular diagonal perturbations.
//!
//! For every activity pattern `K ⊆ L` with `K` meeting the perturbable set,
//! the witness system of [`SingularSystem`] is solved by multi-start
//! Levenberg-Marquardt. A converged root whose weights are strictly positive
//! and whose constraints outside `L` are strictly slack certifies that MFCQ
//! fails at `x` for the level `alpha`. Witnesses are clustered in `alpha` and
//! each cluster is re-polished from its best member.
//!
//! The window is half-open: levels within `delta_dedup` of its upper end are
//! not reported.

mod bounds;
mod lm;
mod oracles;
mod system;

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ProblemInstance;

pub use bounds::milnor_thom_bound;
pub use lm::DAMPING_INIT;
pub use oracles::{analytic_singulars_ball_box, analytic_singulars_grid};
pub use system::{build_singular_system, SingularSystem, Unpacked};

/// Largest inequality count accepted by [`scan_singular`].
pub const MAX_CONSTRAINTS: usize = 12;
/// Band below the strict side conditions in which a root is kept as uncertain.
const BORDERLINE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    /// Random starts per system.
    pub starts: usize,
    pub seed: u64,
    pub max_iter: usize,
    pub tol_residual: f64,
    pub lambda_min: f64,
    pub sigma_slack: f64,
    pub delta_dedup: f64,
    /// Overrides the problem's sample box.
    pub sample_box: Option<Vec<(f64, f64)>>,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            starts: 200,
            seed: 0,
            max_iter: 100,
            tol_residual: 1e-10,
            lambda_min: 1e-10,
            sigma_slack: 1e-9,
            delta_dedup: 1e-6,
            sample_box: None,
        }
    }
}

/// Search region: an `alpha` range and a box for `x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanWindow {
    pub alpha: (f64, f64),
    pub sample_box: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularWitness {
    pub alpha: f64,
    pub x: Vec<f64>,
    /// Weights on `k`, summing to one.
    pub lambda: Vec<f64>,
    pub kappa: Vec<f64>,
    /// Zero-based indices of the weighted constraints.
    pub k: Vec<usize>,
    /// Zero-based indices of the constraints held active.
    pub l: Vec<usize>,
    pub residual_norm: f64,
    pub min_lambda: f64,
    /// Smallest slack outside `l`; `None` when `l` holds every constraint.
    pub min_slack: Option<f64>,
    pub side_conditions_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularValue {
    pub alpha: f64,
    pub witness: SingularWitness,
    /// Number of raw roots merged into this value.
    pub cluster_size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub problem: String,
    pub window: (f64, f64),
    /// Strictly increasing.
    pub singular_values: Vec<SingularValue>,
    /// Converged roots that miss a strict side condition by a hair.
    pub uncertain: Vec<SingularWitness>,
    #[serde(with = "decimal")]
    pub bound: BigUint,
    pub patterns: usize,
    pub starts_used: usize,
    pub seed: u64,
}

mod decimal {
    use num_bigint::BigUint;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(D::Error::custom)
    }
}

impl ScanReport {
    pub fn alphas(&self) -> Vec<f64> {
        self.singular_values.iter().map(|v| v.alpha).collect()
    }

    pub fn within_bound(&self) -> bool {
        BigUint::from(self.singular_values.len()) <= self.bound
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Unsupported(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<ScanReport> {
        serde_json::from_str(s).map_err(|e| Error::InvalidParameter(e.to_string()))
    }

    /// `alpha, K, L, residual, x1..xn` with one-based indices joined by `;`.
    pub fn to_csv(&self) -> String {
        let n = self
            .singular_values
            .first()
            .map_or(0, |v| v.witness.x.len());
        let mut out = String::from("alpha,K,L,residual");
        for i in 0..n {
            out.push_str(&format!(",x{}", i + 1));
        }
        out.push('\n');
        let join = |v: &[usize]| {
            v.iter()
                .map(|i| (i + 1).to_string())
                .collect::<Vec<_>>()
                .join(";")
        };
        for v in &self.singular_values {
            let w = &v.witness;
            out.push_str(&format!(
                "{:e},{},{},{:e}",
                v.alpha,
                join(&w.k),
                join(&w.l),
                w.residual_norm
            ));
            for xi in &w.x {
                out.push_str(&format!(",{xi:e}"));
            }
            out.push('\n');
        }
        out
    }
}

fn witness_of(sys: &SingularSystem, z: &[f64], residual: f64, cfg: &ScanConfig) -> SingularWitness {
    let u = sys.unpack(z);
    let min_lambda = u.lambda.iter().copied().fold(f64::INFINITY, f64::min);
    let min_slack = sys.min_outside_slack(&u.x, u.alpha);
    SingularWitness {
        side_conditions_ok: min_lambda >= cfg.lambda_min && min_slack >= cfg.sigma_slack,
        min_slack: min_slack.is_finite().then_some(min_slack),
        alpha: u.alpha,
        x: u.x,
        lambda: u.lambda,
        kappa: u.kappa,
        k: sys.k().to_vec(),
        l: sys.l().to_vec(),
        residual_norm: residual,
        min_lambda,
    }
}

fn in_window(w: &SingularWitness, window: &ScanWindow, cfg: &ScanConfig) -> bool {
    let (lo, hi) = window.alpha;
    w.alpha >= lo
        && w.alpha < hi - cfg.delta_dedup
        && w.x
            .iter()
            .zip(&window.sample_box)
            .all(|(&xi, &(a, b))| xi >= a && xi <= b)
}

fn borderline(w: &SingularWitness) -> bool {
    !w.side_conditions_ok
        && w.min_lambda >= -BORDERLINE
        && w.min_slack.is_none_or(|s| s >= -BORDERLINE)
}

fn random_start(sys: &SingularSystem, window: &ScanWindow, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let x: Vec<f64> = window
        .sample_box
        .iter()
        .map(|&(lo, hi)| rng.random_range(lo..=hi))
        .collect();
    let mut lambda: Vec<f64> = (0..sys.k().len())
        .map(|_| rng.sample::<f64, _>(Exp1))
        .collect();
    let total: f64 = lambda.iter().sum();
    lambda.iter_mut().for_each(|v| *v /= total);
    let r = sys.num_unknowns() - sys.num_vars() - sys.k().len() - 1;
    let kappa: Vec<f64> = (0..r).map(|_| rng.sample(StandardNormal)).collect();
    let (lo, hi) = window.alpha;
    let alpha = rng.random_range(lo..=hi);
    sys.pack(&x, &lambda, &kappa, alpha)
}

/// Runs `cfg.starts` Levenberg-Marquardt solves on one system, seeded by
/// `cfg.seed` and `stream`. Returns every converged root inside the window
/// that either satisfies the strict side conditions or misses them by less
/// than a small band (`side_conditions_ok` tells the two apart).
pub fn solve_system_multistart(
    sys: &SingularSystem,
    window: &ScanWindow,
    cfg: &ScanConfig,
    stream: u64,
) -> Vec<SingularWitness> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(stream);
    let mut out = Vec::new();
    for _ in 0..cfg.starts {
        let z0 = random_start(sys, window, &mut rng);
        let r = lm::levenberg_marquardt(sys, &z0, cfg.max_iter);
        if !(r.residual <= cfg.tol_residual) {
            continue;
        }
        let w = witness_of(sys, &r.z, r.residual, cfg);
        if in_window(&w, window, cfg) && (w.side_conditions_ok || borderline(&w)) {
            out.push(w);
        }
    }
    out
}

/// All `(K, L)` with `K ⊆ L` and `K` meeting the perturbable set, in a fixed
/// order.
pub fn activity_patterns(prob: &ProblemInstance) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    let m = prob.num_inequalities();
    if m > MAX_CONSTRAINTS {
        return Err(Error::TooManyConstraints {
            m,
            guard: MAX_CONSTRAINTS,
        });
    }
    let mut out = Vec::new();
    for code in 0..3usize.pow(m as u32) {
        let (mut k, mut l) = (Vec::new(), Vec::new());
        let mut c = code;
        for i in 0..m {
            match c % 3 {
                1 => l.push(i),
                2 => {
                    k.push(i);
                    l.push(i);
                }
                _ => {}
            }
            c /= 3;
        }
        if k.iter().any(|&i| prob.is_perturbable(i)) {
            out.push((k, l));
        }
    }
    Ok(out)
}

fn order(a: &SingularWitness, b: &SingularWitness) -> std::cmp::Ordering {
    a.alpha
        .total_cmp(&b.alpha)
        .then_with(|| a.k.cmp(&b.k))
        .then_with(|| a.l.cmp(&b.l))
        .then_with(|| a.residual_norm.total_cmp(&b.residual_norm))
}

/// Groups sorted witnesses whose consecutive levels differ by at most `delta`.
fn clusters(mut ws: Vec<SingularWitness>, delta: f64) -> Vec<Vec<SingularWitness>> {
    ws.sort_by(order);
    let mut out: Vec<Vec<SingularWitness>> = Vec::new();
    for w in ws {
        match out.last_mut() {
            Some(c) if w.alpha - c.last().expect("nonempty").alpha <= delta => c.push(w),
            _ => out.push(vec![w]),
        }
    }
    out
}

fn best(cluster: &[SingularWitness]) -> &SingularWitness {
    cluster
        .iter()
        .min_by(|a, b| {
            a.residual_norm
                .total_cmp(&b.residual_norm)
                .then_with(|| order(a, b))
        })
        .expect("nonempty cluster")
}

/// Scans `window` for singular levels of the diagonal perturbation.
pub fn scan_singular(
    prob: &ProblemInstance,
    window: (f64, f64),
    starts: usize,
    seed: u64,
) -> Result<ScanReport> {
    scan_singular_with(
        prob,
        window,
        &ScanConfig {
            starts,
            seed,
            ..Default::default()
        },
    )
}

pub fn scan_singular_with(
    prob: &ProblemInstance,
    window: (f64, f64),
    cfg: &ScanConfig,
) -> Result<ScanReport> {
    let (lo, hi) = window;
    if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
        return Err(Error::DegenerateWindow(lo, hi));
    }
    let patterns = activity_patterns(prob)?;
    let sample_box = cfg
        .sample_box
        .clone()
        .unwrap_or_else(|| prob.sample_box().to_vec());
    if sample_box.len() != prob.num_vars() {
        return Err(Error::DimensionMismatch {
            expected: prob.num_vars(),
            got: sample_box.len(),
        });
    }
    let win = ScanWindow {
        alpha: window,
        sample_box,
    };
    let bound = milnor_thom_bound(
        prob.num_vars() as u32,
        prob.num_inequalities() as u32,
        prob.max_constraint_degree().max(1),
        prob.num_equalities() as u32,
    )?;

    let systems = patterns
        .iter()
        .map(|(k, l)| build_singular_system(prob, k, l))
        .collect::<Result<Vec<_>>>()?;
    let raw: Vec<Vec<SingularWitness>> = systems
        .par_iter()
        .enumerate()
        .map(|(i, sys)| solve_system_multistart(sys, &win, cfg, i as u64 + 1))
        .collect();

    let (certified, uncertain): (Vec<_>, Vec<_>) = raw
        .into_iter()
        .flatten()
        .partition(|w| w.side_conditions_ok);

    let mut singular_values = Vec::new();
    for c in clusters(certified, cfg.delta_dedup) {
        let b = best(&c);
        let sys = systems
            .iter()
            .find(|s| s.k() == b.k.as_slice() && s.l() == b.l.as_slice())
            .expect("witness comes from a built system");
        let z = sys.pack(&b.x, &b.lambda, &b.kappa, b.alpha);
        let r = lm::levenberg_marquardt(sys, &z, cfg.max_iter);
        let polished = witness_of(sys, &r.z, r.residual, cfg);
        let witness = if polished.side_conditions_ok
            && polished.residual_norm <= b.residual_norm
            && in_window(&polished, &win, cfg)
        {
            polished
        } else {
            b.clone()
        };
        singular_values.push(SingularValue {
            alpha: witness.alpha,
            witness,
            cluster_size: c.len(),
        });
    }
    singular_values.sort_by(|a, b| a.alpha.total_cmp(&b.alpha));
    let uncertain = clusters(uncertain, cfg.delta_dedup)
        .iter()
        .map(|c| best(c).clone())
        .collect();

    Ok(ScanReport {
        problem: prob.name().to_string(),
        window,
        singular_values,
        uncertain,
        bound,
        patterns: patterns.len(),
        starts_used: cfg.starts,
        seed: cfg.seed,
    })
}
