//! Closed-form singular levels for the `ball_box` and `grid_boxes` families.

use crate::error::{Error, Result};

const GENERIC_GAP: f64 = 1e-9;
const MAX_ORACLE_DIM: usize = 12;

fn sorted_distinct(mut v: Vec<f64>) -> Result<Vec<f64>> {
    v.sort_by(f64::total_cmp);
    if v.windows(2).any(|w| w[1] - w[0] <= GENERIC_GAP) {
        return Err(Error::NonGeneric);
    }
    Ok(v)
}

/// `4n - sum_{i in F} (v_i - a_i)^2` over every nonempty face `F` of
/// `[-1,1]^n` with signs `v`; `3^n - 1` values.
pub fn analytic_singulars_ball_box(n: usize, a: &[f64]) -> Result<Vec<f64>> {
    if n == 0 || n > MAX_ORACLE_DIM {
        return Err(Error::InvalidParameter(format!(
            "n must be in 1..={MAX_ORACLE_DIM}"
        )));
    }
    if a.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.len(),
        });
    }
    if a.iter().any(|&v| !(v > -1.0 && v < 1.0)) {
        return Err(Error::InvalidParameter("a must lie in (-1, 1)^n".into()));
    }
    let total = 3usize.pow(n as u32);
    let mut out = Vec::with_capacity(total - 1);
    // digit 0: coordinate free, 1: face at -1, 2: face at +1
    for code in 1..total {
        let mut c = code;
        let mut dist = 0.0;
        for &ai in a {
            let v = match c % 3 {
                0 => None,
                1 => Some(-1.0),
                _ => Some(1.0),
            };
            c /= 3;
            if let Some(v) = v {
                dist += (v - ai) * (v - ai);
            }
        }
        out.push(4.0 * n as f64 - dist);
    }
    sorted_distinct(out)
}

/// `4 n d^2 - |(2 k_i v_i)_i - a|^2` over signs `v` and `k in {1..d/2}^n`;
/// `d^n` values.
pub fn analytic_singulars_grid(n: usize, d: u32, a: &[f64]) -> Result<Vec<f64>> {
    if n == 0 || n > MAX_ORACLE_DIM {
        return Err(Error::InvalidParameter(format!(
            "n must be in 1..={MAX_ORACLE_DIM}"
        )));
    }
    if d < 2 || d % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "d must be even and at least 2, got {d}"
        )));
    }
    if a.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.len(),
        });
    }
    let df = d as f64;
    if a.iter().any(|&v| !(v > -df && v < df)) {
        return Err(Error::InvalidParameter("a must lie in (-d, d)^n".into()));
    }
    let d = d as usize;
    let total = d
        .checked_pow(n as u32)
        .ok_or_else(|| Error::InvalidParameter("d^n is too large".into()))?;
    let mut out = Vec::with_capacity(total);
    // each coordinate picks one of d far corners: 2k * v with k in 1..=d/2
    for code in 0..total {
        let mut c = code;
        let mut dist = 0.0;
        for &ai in a {
            let digit = c % d;
            c /= d;
            let k = (digit / 2 + 1) as f64;
            let v = if digit % 2 == 0 { 1.0 } else { -1.0 };
            let t = 2.0 * k * v - ai;
            dist += t * t;
        }
        out.push(4.0 * n as f64 * df * df - dist);
    }
    sorted_distinct(out)
}
