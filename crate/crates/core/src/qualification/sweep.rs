//! Boundary sampling and batch certification.
//!
//! A pool of strictly feasible seeds is drawn from the sample box. Each
//! sample takes a seed and a random direction, marches to the first
//! infeasible point inside the box and bisects the crossing down to the
//! boundary. Samples run in parallel with their own RNG stream, so results
//! do not depend on the worker count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_mfcq_hull, check_mfcq_lp, MfcqCertificate, MfcqTolerances, Verdict};
use crate::error::{Error, Result};
use crate::model::{PerturbationSpec, ProblemInstance};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub samples: usize,
    pub seed: u64,
    pub tolerances: MfcqTolerances,
    pub bisection_iters: usize,
    /// Overrides the problem's sample box.
    pub sample_box: Option<Vec<(f64, f64)>>,
    /// Also run the hull formulation on every point.
    pub with_hull: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            samples: 1000,
            seed: 0,
            tolerances: MfcqTolerances::default(),
            bisection_iters: 60,
            sample_box: None,
            with_hull: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub sample_id: usize,
    pub x: Vec<f64>,
    pub certificate: MfcqCertificate,
    pub hull: Option<MfcqCertificate>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub samples_requested: usize,
    pub seed: u64,
    pub points: Vec<SweepPoint>,
    pub holds: usize,
    pub fails: usize,
    pub degenerate: usize,
    /// Smallest LP margin over all certified points.
    pub worst_margin: f64,
}

impl SweepReport {
    pub fn all_hold(&self) -> bool {
        !self.points.is_empty() && self.fails == 0 && self.degenerate == 0
    }

    /// CSV rows: `sample_id, x..., verdict, margin_or_distance, active_indices`
    /// with one-based active indices separated by `;`.
    pub fn to_csv(&self) -> String {
        let n = self.points.first().map_or(0, |p| p.x.len());
        let mut out = String::from("sample_id");
        for k in 0..n {
            out.push_str(&format!(",x{}", k + 1));
        }
        out.push_str(",verdict,margin_or_distance,active_indices\n");
        for p in &self.points {
            out.push_str(&p.sample_id.to_string());
            for v in &p.x {
                out.push_str(&format!(",{v:e}"));
            }
            let idx: Vec<String> = p
                .certificate
                .active_set
                .indices
                .iter()
                .map(|i| (i + 1).to_string())
                .collect();
            out.push_str(&format!(
                ",{:?},{:e},{}\n",
                p.certificate.verdict,
                p.certificate.margin,
                idx.join(";")
            ));
        }
        out
    }
}

const SEED_POOL: usize = 64;
const SEED_DRAWS: usize = 200_000;
const DIRECTION_TRIES: usize = 32;
const MARCH_STEPS: usize = 32;

fn strictly_feasible(prob: &ProblemInstance, bounds: &[f64], x: &[f64]) -> bool {
    (0..prob.num_inequalities()).all(|i| prob.inequality(i).eval(x) < bounds[i])
}

fn feasible(prob: &ProblemInstance, bounds: &[f64], x: &[f64]) -> bool {
    (0..prob.num_inequalities()).all(|i| prob.inequality(i).eval(x) <= bounds[i])
}

fn uniform_in(rng: &mut ChaCha8Rng, bx: &[(f64, f64)]) -> Vec<f64> {
    bx.iter()
        .map(|&(lo, hi)| rng.random_range(lo..hi))
        .collect()
}

fn random_direction(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|a| a / norm).collect();
        }
    }
}

/// Largest `t` with `p + t u` still in the box.
fn box_exit(p: &[f64], u: &[f64], bx: &[(f64, f64)]) -> f64 {
    p.iter()
        .zip(u)
        .zip(bx)
        .map(|((&pi, &ui), &(lo, hi))| {
            if ui > 0.0 {
                (hi - pi) / ui
            } else if ui < 0.0 {
                (lo - pi) / ui
            } else {
                f64::INFINITY
            }
        })
        .fold(f64::INFINITY, f64::min)
}

fn along(p: &[f64], u: &[f64], t: f64) -> Vec<f64> {
    p.iter().zip(u).map(|(a, b)| a + t * b).collect()
}

fn boundary_point(
    prob: &ProblemInstance,
    bounds: &[f64],
    pool: &[Vec<f64>],
    bx: &[(f64, f64)],
    rng: &mut ChaCha8Rng,
    bisection_iters: usize,
) -> Option<Vec<f64>> {
    let n = prob.num_vars();
    for _ in 0..DIRECTION_TRIES {
        let p = &pool[rng.random_range(0..pool.len())];
        let u = random_direction(rng, n);
        let tmax = box_exit(p, &u, bx);
        if !tmax.is_finite() || tmax <= 0.0 {
            continue;
        }
        let mut prev = 0.0;
        let mut bracket = None;
        for k in 1..=MARCH_STEPS {
            let t = tmax * k as f64 / MARCH_STEPS as f64;
            if !feasible(prob, bounds, &along(p, &u, t)) {
                bracket = Some((prev, t));
                break;
            }
            prev = t;
        }
        let Some((mut lo, mut hi)) = bracket else {
            continue;
        };
        for _ in 0..bisection_iters {
            let mid = 0.5 * (lo + hi);
            if feasible(prob, bounds, &along(p, &u, mid)) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        return Some(along(p, &u, lo));
    }
    None
}

/// Collects strictly feasible seeds; deterministic in `seed`.
pub(crate) fn interior_pool(
    prob: &ProblemInstance,
    bounds: &[f64],
    bx: &[(f64, f64)],
    seed: u64,
) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool = Vec::new();
    for _ in 0..SEED_DRAWS {
        let x = uniform_in(&mut rng, bx);
        if strictly_feasible(prob, bounds, &x) {
            pool.push(x);
            if pool.len() == SEED_POOL {
                break;
            }
        }
    }
    pool
}

/// Samples boundary points of the perturbed set and certifies each one.
pub fn sweep_mfcq(
    prob: &ProblemInstance,
    pert: &PerturbationSpec,
    config: &SweepConfig,
) -> Result<SweepReport> {
    if prob.num_equalities() > 0 {
        return Err(Error::Unsupported(
            "boundary sampling is not available for equality-constrained problems".into(),
        ));
    }
    let bounds = prob.bounds(pert)?;
    let bx = config
        .sample_box
        .clone()
        .unwrap_or_else(|| prob.sample_box().to_vec());
    if bx.len() != prob.num_vars() {
        return Err(Error::DimensionMismatch {
            expected: prob.num_vars(),
            got: bx.len(),
        });
    }
    let pool = interior_pool(prob, &bounds, &bx, config.seed);
    if pool.is_empty() {
        return Err(Error::NoFeasiblePoint);
    }

    let results: Vec<Option<Result<SweepPoint>>> = (0..config.samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(i as u64 + 1);
            let x = boundary_point(prob, &bounds, &pool, &bx, &mut rng, config.bisection_iters)?;
            Some((|| {
                let certificate = check_mfcq_lp(prob, pert, &x, &config.tolerances)?;
                let hull = if config.with_hull {
                    Some(check_mfcq_hull(prob, pert, &x, &config.tolerances)?)
                } else {
                    None
                };
                Ok(SweepPoint {
                    sample_id: i,
                    x,
                    certificate,
                    hull,
                })
            })())
        })
        .collect();

    let mut points = Vec::with_capacity(results.len());
    for r in results.into_iter().flatten() {
        points.push(r?);
    }
    if points.is_empty() {
        return Err(Error::NoFeasiblePoint);
    }
    let count = |v: Verdict| points.iter().filter(|p| p.certificate.verdict == v).count();
    let worst_margin = points
        .iter()
        .map(|p| p.certificate.margin)
        .fold(f64::INFINITY, f64::min);
    Ok(SweepReport {
        samples_requested: config.samples,
        seed: config.seed,
        holds: count(Verdict::Holds),
        fails: count(Verdict::Fails),
        degenerate: count(Verdict::Degenerate),
        worst_margin,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{catalog, CatalogParams};

    #[test]
    fn cusp_regular_level_all_holds() {
        let p = catalog("cusp", &CatalogParams::default()).unwrap();
        let cfg = SweepConfig {
            samples: 300,
            seed: 3,
            ..Default::default()
        };
        let rep = sweep_mfcq(&p, &PerturbationSpec::Diagonal(0.1), &cfg).unwrap();
        assert!(
            rep.all_hold(),
            "fails {} degenerate {}",
            rep.fails,
            rep.degenerate
        );
        assert!(rep.worst_margin > 0.0);
        assert!(rep.points.len() >= 250);
    }

    #[test]
    fn cusp_tip_is_not_certified() {
        let p = catalog("cusp", &CatalogParams::default()).unwrap();
        let cfg = SweepConfig {
            samples: 200,
            seed: 11,
            sample_box: Some(vec![(-2e-5, 0.0), (-1e-14, 1e-14)]),
            ..Default::default()
        };
        let rep = sweep_mfcq(&p, &PerturbationSpec::Diagonal(0.0), &cfg).unwrap();
        assert!(rep.fails + rep.degenerate >= 1, "{:?}", rep.worst_margin);
    }

    #[test]
    fn empty_set_is_reported() {
        let p = catalog("ball_box", &CatalogParams::default()).unwrap();
        let err = sweep_mfcq(
            &p,
            &PerturbationSpec::Diagonal(1.0),
            &SweepConfig::default(),
        )
        .unwrap_err();
        assert_eq!(err, Error::NoFeasiblePoint);
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let p = catalog("tangent_discs", &CatalogParams::default()).unwrap();
        let cfg = SweepConfig {
            samples: 64,
            seed: 5,
            ..Default::default()
        };
        let pert = PerturbationSpec::Diagonal(0.2);
        let a = sweep_mfcq(&p, &pert, &cfg).unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let b = pool.install(|| sweep_mfcq(&p, &pert, &cfg).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let p = catalog("interval_pair", &CatalogParams::default()).unwrap();
        let cfg = SweepConfig {
            samples: 5,
            seed: 1,
            ..Default::default()
        };
        let rep = sweep_mfcq(&p, &PerturbationSpec::Vector(vec![-0.19, -0.75]), &cfg).unwrap();
        let csv = rep.to_csv();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "sample_id,x1,verdict,margin_or_distance,active_indices"
        );
        assert_eq!(lines.count(), rep.points.len());
    }
}
