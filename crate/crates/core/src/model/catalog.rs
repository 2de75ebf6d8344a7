//! Built-in problem families.
//!
//! | family          | constraints                                            | perturbable |
//! |-----------------|--------------------------------------------------------|-------------|
//! | `cusp`          | `x1^3 + x2 <= 0`, `x1^3 - x2 <= 0`                     | all         |
//! | `cusp_boxed`    | cusp plus `-x1 - 2 <= 0`                               | all         |
//! | `tangent_discs` | unit discs centred at `(0,0)` and `(2 + gap, 0)`       | all         |
//! | `ball_box`      | `4n - |x-a|^2 <= 0`, `x_i^2 - 1 <= 0`                  | ball only   |
//! | `grid_boxes`    | `4nd^2 - |x-a|^2 <= 0`, `Q_d(x_i) <= 0`                | ball only   |
//! | `interval_pair` | `1 - x^2 <= 0`, `(x+1)^2 - 4 <= 0`                     | all         |
//!
//! `Q_d(t) = prod_{k=1..d} (t^2 - k^2)` with `d` even.

use super::ProblemInstance;
use crate::error::{Error, Result};
use crate::poly::Polynomial;

pub const FAMILIES: &[&str] = &[
    "cusp",
    "cusp_boxed",
    "tangent_discs",
    "ball_box",
    "grid_boxes",
    "interval_pair",
];

const DEFAULT_BALL_CENTER: &[f64] = &[0.4, 0.2, -0.15, 0.05, 0.3, -0.35];
const DEFAULT_GRID_CENTER: &[f64] = &[0.6, 0.4, 0.3, 0.15];

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CatalogParams {
    pub n: Option<usize>,
    pub a: Option<Vec<f64>>,
    pub d: Option<u32>,
    /// Extra separation between the two discs of `tangent_discs`.
    pub gap: Option<f64>,
}

pub fn catalog(name: &str, params: &CatalogParams) -> Result<ProblemInstance> {
    match name {
        "cusp" => cusp(false),
        "cusp_boxed" => cusp(true),
        "tangent_discs" => tangent_discs(params.gap.unwrap_or(0.0)),
        "ball_box" => {
            let n = params.n.unwrap_or(2);
            let a = center(n, params.a.as_deref(), DEFAULT_BALL_CENTER)?;
            ball_box(n, &a)
        }
        "grid_boxes" => {
            let n = params.n.unwrap_or(2);
            let d = params.d.unwrap_or(2);
            let a = center(n, params.a.as_deref(), DEFAULT_GRID_CENTER)?;
            grid_boxes(n, d, &a)
        }
        "interval_pair" => interval_pair(),
        other => Err(Error::UnknownFamily(other.to_string())),
    }
}

fn center(n: usize, given: Option<&[f64]>, default: &[f64]) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    match given {
        Some(a) if a.len() == n => Ok(a.to_vec()),
        Some(a) => Err(Error::DimensionMismatch {
            expected: n,
            got: a.len(),
        }),
        None if n <= default.len() => Ok(default[..n].to_vec()),
        None => Err(Error::InvalidParameter(format!(
            "no default center for n = {n}; pass `a` explicitly"
        ))),
    }
}

fn cusp(boxed: bool) -> Result<ProblemInstance> {
    let x1 = Polynomial::var(2, 0);
    let x2 = Polynomial::var(2, 1);
    let c = x1.pow(3);
    let mut gs = vec![&c + &x2, &c - &x2];
    if boxed {
        gs.push(Polynomial::affine(&[-1.0, 0.0], -2.0));
        ProblemInstance::new("cusp_boxed", 2, gs, vec![])?
            .with_objective(-&x1)?
            .with_sample_box(vec![(-2.5, 1.5), (-10.0, 10.0)])
    } else {
        ProblemInstance::new("cusp", 2, gs, vec![])?.with_sample_box(vec![(-2.0, 1.0); 2])
    }
}

fn tangent_discs(gap: f64) -> Result<ProblemInstance> {
    if !gap.is_finite() || gap < 0.0 {
        return Err(Error::InvalidParameter(
            "gap must be a nonnegative number".into(),
        ));
    }
    let x1 = Polynomial::var(2, 0);
    let x2 = Polynomial::var(2, 1);
    let one = Polynomial::constant(2, 1.0);
    let sq2 = &x2 * &x2;
    let g1 = &(&(&x1 * &x1) + &sq2) - &one;
    let s = &x1 - &Polynomial::constant(2, 2.0 + gap);
    let g2 = &(&(&s * &s) + &sq2) - &one;
    ProblemInstance::new("tangent_discs", 2, vec![g1, g2], vec![])?
        .with_sample_box(vec![(-1.5, 3.5 + gap), (-1.5, 1.5)])
}

/// `c - |x - a|^2`.
fn ball_complement(c: f64, a: &[f64]) -> Polynomial {
    let n = a.len();
    let mut g = Polynomial::constant(n, c);
    for (k, &ak) in a.iter().enumerate() {
        let t = &Polynomial::var(n, k) - &Polynomial::constant(n, ak);
        g = &g - &(&t * &t);
    }
    g
}

fn ball_box(n: usize, a: &[f64]) -> Result<ProblemInstance> {
    if a.iter().any(|&v| !(v > -1.0 && v < 1.0)) {
        return Err(Error::InvalidParameter(
            "ball_box center must lie in the open cube (-1, 1)^n".into(),
        ));
    }
    let mut gs = vec![ball_complement(4.0 * n as f64, a)];
    for k in 0..n {
        let x = Polynomial::var(n, k);
        gs.push(&(&x * &x) - &Polynomial::constant(n, 1.0));
    }
    let f = Polynomial::affine(&vec![1.0; n], 0.0);
    ProblemInstance::new(format!("ball_box(n={n})"), n, gs, vec![])?
        .with_perturbable(&[0])?
        .with_objective(f)?
        .with_sample_box(vec![(-1.5, 1.5); n])
}

/// `Q_d(x_k)` in `n` variables.
fn q_poly(n: usize, k: usize, d: u32) -> Polynomial {
    let x = Polynomial::var(n, k);
    let sq = &x * &x;
    (1..=d).fold(Polynomial::constant(n, 1.0), |acc, j| {
        &acc * &(&sq - &Polynomial::constant(n, (j * j) as f64))
    })
}

fn grid_boxes(n: usize, d: u32, a: &[f64]) -> Result<ProblemInstance> {
    if d < 2 || d % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "grid_boxes requires an even d >= 2, got {d}"
        )));
    }
    let df = d as f64;
    if a.iter().any(|&v| !(v > -df && v < df)) {
        return Err(Error::InvalidParameter(
            "grid_boxes center must lie in the open cube (-d, d)^n".into(),
        ));
    }
    let mut gs = vec![ball_complement(4.0 * n as f64 * df * df, a)];
    gs.extend((0..n).map(|k| q_poly(n, k, d)));
    ProblemInstance::new(format!("grid_boxes(n={n},d={d})"), n, gs, vec![])?
        .with_perturbable(&[0])?
        .with_sample_box(vec![(-df - 1.0, df + 1.0); n])
}

fn interval_pair() -> Result<ProblemInstance> {
    let g1 = Polynomial::univariate(&[1.0, 0.0, -1.0]);
    let g2 = Polynomial::univariate(&[-3.0, 2.0, 1.0]);
    ProblemInstance::new("interval_pair", 1, vec![g1, g2], vec![])?
        .with_sample_box(vec![(-5.0, 5.0)])
}
