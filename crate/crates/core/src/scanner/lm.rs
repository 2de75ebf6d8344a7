//! Levenberg-Marquardt for small dense least-squares systems.

use nalgebra::DVector;

use super::system::{norm2, SingularSystem};

pub const DAMPING_INIT: f64 = 1e-3;
const DAMPING_UP: f64 = 2.0;
const DAMPING_DOWN: f64 = 3.0;

#[derive(Clone, Debug)]
pub(crate) struct LmResult {
    pub z: Vec<f64>,
    pub residual: f64,
}

/// Minimizes `|F(z)|_2` from `z0` for at most `max_iter` iterations
/// (rejected steps count).
pub(crate) fn levenberg_marquardt(sys: &SingularSystem, z0: &[f64], max_iter: usize) -> LmResult {
    let p = z0.len();
    let mut z = z0.to_vec();
    let mut f = sys.residual(&z);
    let mut res = norm2(&f);
    let mut mu = DAMPING_INIT;
    for _ in 0..max_iter {
        if !res.is_finite() || res <= 1e-15 {
            break;
        }
        let j = sys.jacobian(&z);
        let fv = DVector::from_column_slice(&f);
        let jt = j.transpose();
        let a = &jt * &j;
        let g = &jt * &fv;
        let mut damped = a.clone();
        for d in 0..p {
            damped[(d, d)] += mu;
        }
        let step = match damped.cholesky() {
            Some(ch) => ch.solve(&(-g)),
            None => {
                mu *= DAMPING_UP;
                continue;
            }
        };
        let trial: Vec<f64> = z.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
        let ft = sys.residual(&trial);
        let rt = norm2(&ft);
        if rt.is_finite() && rt < res {
            let moved = norm2(step.as_slice());
            z = trial;
            f = ft;
            res = rt;
            mu /= DAMPING_DOWN;
            if moved <= 1e-16 * (1.0 + norm2(&z)) {
                break;
            }
        } else {
            mu *= DAMPING_UP;
            if mu > 1e16 {
                break;
            }
        }
    }
    LmResult { z, residual: res }
}
