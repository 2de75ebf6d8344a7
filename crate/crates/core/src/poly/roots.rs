//! Real root isolation for univariate polynomials on a closed window.
//!
//! The window is split at the real critical points (found recursively from
//! the derivative), so every piece is monotone and holds at most one root,
//! located by a sign change and refined by bisection. Even-multiplicity
//! roots show up as critical points where the polynomial vanishes.

use super::Polynomial;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct RootOptions {
    /// Roots closer than this are reported once.
    pub merge_tol: f64,
    /// Relative residual under which a critical point counts as a root.
    pub touch_tol: f64,
}

impl Default for RootOptions {
    fn default() -> Self {
        RootOptions {
            merge_tol: 1e-9,
            touch_tol: 1e-12,
        }
    }
}

/// Sorted, multiplicity-collapsed real roots of `p` in `[lo, hi]`.
pub fn univariate_real_roots(p: &Polynomial, lo: f64, hi: f64) -> Result<Vec<f64>> {
    univariate_real_roots_with(p, lo, hi, RootOptions::default())
}

pub fn univariate_real_roots_with(
    p: &Polynomial,
    lo: f64,
    hi: f64,
    opts: RootOptions,
) -> Result<Vec<f64>> {
    if p.num_vars() != 1 {
        return Err(Error::NotUnivariate(p.num_vars()));
    }
    if p.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    if !(lo.is_finite() && hi.is_finite()) || lo > hi {
        return Err(Error::DegenerateWindow(lo, hi));
    }
    let coeffs = p.univariate_coeffs()?;
    let mut roots = dense_roots(&coeffs, lo, hi, &opts);
    roots.sort_by(f64::total_cmp);
    Ok(collapse(&coeffs, roots, &opts))
}

/// Merges neighbouring roots that are closer than `merge_tol` or between
/// which the polynomial stays numerically zero (odd-multiplicity clusters).
fn collapse(c: &[f64], roots: Vec<f64>, opts: &RootOptions) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::with_capacity(roots.len());
    let mut cluster: Vec<f64> = Vec::new();
    for r in roots {
        if let Some(&last) = cluster.last() {
            let mid = 0.5 * (last + r);
            let flat = horner(c, mid).abs() <= opts.touch_tol * magnitude(c, mid).max(1.0);
            if r - last > opts.merge_tol && !flat {
                out.push(cluster.iter().sum::<f64>() / cluster.len() as f64);
                cluster.clear();
            }
        }
        cluster.push(r);
    }
    if !cluster.is_empty() {
        out.push(cluster.iter().sum::<f64>() / cluster.len() as f64);
    }
    out
}

fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

/// Magnitude bound used to judge whether a value is zero at `x`.
fn magnitude(c: &[f64], x: f64) -> f64 {
    let ax = x.abs();
    c.iter().rev().fold(0.0, |acc, &a| acc * ax + a.abs())
}

fn trim(c: &[f64]) -> &[f64] {
    let mut end = c.len();
    while end > 0 && c[end - 1] == 0.0 {
        end -= 1;
    }
    &c[..end]
}

fn derivative(c: &[f64]) -> Vec<f64> {
    c.iter()
        .enumerate()
        .skip(1)
        .map(|(k, &a)| a * k as f64)
        .collect()
}

fn dense_roots(c: &[f64], lo: f64, hi: f64, opts: &RootOptions) -> Vec<f64> {
    let c = trim(c);
    match c.len() {
        0 | 1 => return Vec::new(),
        2 => {
            let r = -c[0] / c[1];
            return if (lo..=hi).contains(&r) {
                vec![r]
            } else {
                Vec::new()
            };
        }
        _ => {}
    }

    let mut critical = dense_roots(&derivative(c), lo, hi, opts);
    critical.sort_by(f64::total_cmp);
    let mut breaks = Vec::with_capacity(critical.len() + 2);
    breaks.push(lo);
    breaks.extend(critical.iter().copied().filter(|&t| t > lo && t < hi));
    breaks.push(hi);

    let is_zero_at = |x: f64| {
        let v = horner(c, x);
        v == 0.0 || v.abs() <= opts.touch_tol * magnitude(c, x).max(1.0)
    };

    let mut roots = Vec::new();
    let zero: Vec<bool> = breaks.iter().map(|&b| is_zero_at(b)).collect();
    for (&b, &z) in breaks.iter().zip(&zero) {
        if z {
            roots.push(b);
        }
    }
    // a monotone piece with a vanishing endpoint holds no other root
    for (w, z) in breaks.windows(2).zip(zero.windows(2)) {
        let (a, b) = (w[0], w[1]);
        let (fa, fb) = (horner(c, a), horner(c, b));
        if fa.signum() != fb.signum() && !z[0] && !z[1] {
            roots.push(bisect(c, a, b, fa));
        }
    }
    roots
}

fn bisect(c: &[f64], mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = horner(c, m);
        if fm == 0.0 {
            return m;
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    // pick the endpoint with the smaller residual
    if horner(c, a).abs() <= horner(c, b).abs() {
        a
    } else {
        b
    }
}
