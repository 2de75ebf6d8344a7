//! Sparse multivariate polynomials over `f64`.
//!
//! Terms are kept merged and sorted in descending graded lexicographic order,
//! so two structurally equal polynomials always have identical term lists and
//! evaluation accumulates in the same order.

mod roots;

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use roots::{univariate_real_roots, RootOptions};

/// A single term `coef * x_0^e_0 * ... * x_{n-1}^e_{n-1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coef: f64,
    pub exps: Vec<u32>,
}

impl Monomial {
    pub fn new(coef: f64, exps: Vec<u32>) -> Self {
        Monomial { coef, exps }
    }

    pub fn total_degree(&self) -> u32 {
        self.exps.iter().sum()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let mut v = self.coef;
        for (xi, &e) in x.iter().zip(&self.exps) {
            if e > 0 {
                v *= xi.powi(e as i32);
            }
        }
        v
    }
}

/// Descending graded lexicographic comparison of exponent vectors.
fn grlex_desc(a: &[u32], b: &[u32]) -> Ordering {
    let da: u32 = a.iter().sum();
    let db: u32 = b.iter().sum();
    db.cmp(&da).then_with(|| b.cmp(a))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    num_vars: usize,
    terms: Vec<Monomial>,
}

impl Polynomial {
    /// Builds a polynomial, merging duplicate exponents and dropping zero
    /// coefficients.
    pub fn new(num_vars: usize, terms: Vec<Monomial>) -> Result<Self> {
        for t in &terms {
            if t.exps.len() != num_vars {
                return Err(Error::DimensionMismatch {
                    expected: num_vars,
                    got: t.exps.len(),
                });
            }
            if !t.coef.is_finite() {
                return Err(Error::NonFinite);
            }
        }
        Ok(Self::from_terms_unchecked(num_vars, terms))
    }

    fn from_terms_unchecked(num_vars: usize, mut terms: Vec<Monomial>) -> Self {
        terms.sort_by(|a, b| grlex_desc(&a.exps, &b.exps));
        let mut merged: Vec<Monomial> = Vec::with_capacity(terms.len());
        for t in terms {
            match merged.last_mut() {
                Some(last) if last.exps == t.exps => last.coef += t.coef,
                _ => merged.push(t),
            }
        }
        merged.retain(|t| t.coef != 0.0);
        Polynomial {
            num_vars,
            terms: merged,
        }
    }

    pub fn zero(num_vars: usize) -> Self {
        Polynomial {
            num_vars,
            terms: Vec::new(),
        }
    }

    pub fn constant(num_vars: usize, c: f64) -> Self {
        Self::from_terms_unchecked(num_vars, vec![Monomial::new(c, vec![0; num_vars])])
    }

    /// The coordinate polynomial `x_k`.
    pub fn var(num_vars: usize, k: usize) -> Self {
        assert!(k < num_vars, "variable index out of range");
        let mut exps = vec![0; num_vars];
        exps[k] = 1;
        Self::from_terms_unchecked(num_vars, vec![Monomial::new(1.0, exps)])
    }

    /// `sum_k c_k x_k + c0`.
    pub fn affine(coeffs: &[f64], c0: f64) -> Self {
        let n = coeffs.len();
        let mut terms: Vec<Monomial> = coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| {
                let mut e = vec![0; n];
                e[k] = 1;
                Monomial::new(c, e)
            })
            .collect();
        terms.push(Monomial::new(c0, vec![0; n]));
        Self::from_terms_unchecked(n, terms)
    }

    /// Univariate polynomial from dense coefficients, `coeffs[k]` multiplying `x^k`.
    pub fn univariate(coeffs: &[f64]) -> Self {
        let terms = coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| Monomial::new(c, vec![k as u32]))
            .collect();
        Self::from_terms_unchecked(1, terms)
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Maximum total degree; the zero polynomial has degree 0.
    pub fn degree(&self) -> u32 {
        self.terms
            .iter()
            .map(Monomial::total_degree)
            .max()
            .unwrap_or(0)
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.num_vars {
            return Err(Error::DimensionMismatch {
                expected: self.num_vars,
                got: x.len(),
            });
        }
        Ok(self.eval(x))
    }

    /// Evaluation without the dimension check. Callers guarantee `x.len() == num_vars`.
    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.num_vars);
        self.terms.iter().map(|t| t.eval(x)).sum()
    }

    /// Partial derivative with respect to `x_k`.
    pub fn derivative(&self, k: usize) -> Polynomial {
        let terms = self
            .terms
            .iter()
            .filter(|t| t.exps[k] > 0)
            .map(|t| {
                let mut exps = t.exps.clone();
                let e = exps[k];
                exps[k] = e - 1;
                Monomial::new(t.coef * e as f64, exps)
            })
            .collect();
        Self::from_terms_unchecked(self.num_vars, terms)
    }

    pub fn gradient(&self) -> Vec<Polynomial> {
        (0..self.num_vars).map(|k| self.derivative(k)).collect()
    }

    /// Symbolic Hessian, row-major `n x n`.
    pub fn hessian(&self) -> Vec<Vec<Polynomial>> {
        self.gradient().iter().map(|g| g.gradient()).collect()
    }

    pub fn scale(&self, c: f64) -> Polynomial {
        let terms = self
            .terms
            .iter()
            .map(|t| Monomial::new(t.coef * c, t.exps.clone()))
            .collect();
        Self::from_terms_unchecked(self.num_vars, terms)
    }

    pub fn pow(&self, k: u32) -> Polynomial {
        let mut acc = Polynomial::constant(self.num_vars, 1.0);
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// Dense coefficients `c[k]` of `x^k` for a univariate polynomial.
    pub fn univariate_coeffs(&self) -> Result<Vec<f64>> {
        if self.num_vars != 1 {
            return Err(Error::NotUnivariate(self.num_vars));
        }
        let mut c = vec![0.0; self.degree() as usize + 1];
        for t in &self.terms {
            c[t.exps[0] as usize] += t.coef;
        }
        Ok(c)
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.num_vars, rhs.num_vars, "num_vars mismatch");
        let terms = self.terms.iter().chain(&rhs.terms).cloned().collect();
        Polynomial::from_terms_unchecked(self.num_vars, terms)
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self + &(-rhs)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.num_vars, rhs.num_vars, "num_vars mismatch");
        let mut terms = Vec::with_capacity(self.terms.len() * rhs.terms.len());
        for a in &self.terms {
            for b in &rhs.terms {
                let exps = a.exps.iter().zip(&b.exps).map(|(x, y)| x + y).collect();
                terms.push(Monomial::new(a.coef * b.coef, exps));
            }
        }
        Polynomial::from_terms_unchecked(self.num_vars, terms)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Polynomial {
            type Output = Polynomial;
            fn $m(self, rhs: Polynomial) -> Polynomial {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            let sign = if t.coef < 0.0 { "-" } else { "+" };
            if i == 0 {
                if t.coef < 0.0 {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            let c = t.coef.abs();
            let vars: Vec<String> = t
                .exps
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(k, &e)| {
                    if e == 1 {
                        format!("x{}", k + 1)
                    } else {
                        format!("x{}^{}", k + 1, e)
                    }
                })
                .collect();
            if vars.is_empty() {
                write!(f, "{c}")?;
            } else if c == 1.0 {
                write!(f, "{}", vars.join("*"))?;
            } else {
                write!(f, "{c}*{}", vars.join("*"))?;
            }
        }
        Ok(())
    }
}

/// Gradient and Hessian polynomials cached for repeated evaluation.
#[derive(Clone, Debug)]
pub struct Differentiated {
    pub value: Polynomial,
    pub grad: Vec<Polynomial>,
    pub hess: Vec<Vec<Polynomial>>,
}

impl Differentiated {
    pub fn new(p: &Polynomial) -> Self {
        let grad = p.gradient();
        let hess = grad.iter().map(|g| g.gradient()).collect();
        Differentiated {
            value: p.clone(),
            grad,
            hess,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.value.eval(x)
    }

    pub fn eval_grad(&self, x: &[f64]) -> Vec<f64> {
        self.grad.iter().map(|g| g.eval(x)).collect()
    }

    pub fn eval_hess(&self, x: &[f64]) -> Vec<Vec<f64>> {
        self.hess
            .iter()
            .map(|row| row.iter().map(|h| h.eval(x)).collect())
            .collect()
    }
}
