//! Constraint systems, perturbation semantics and active sets.

mod catalog;
mod intervals;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{Differentiated, Polynomial};

pub use catalog::{catalog, CatalogParams, FAMILIES};
pub use intervals::{univariate_feasible_intervals, FeasibleSet};

/// Default activity tolerance (absolute).
pub const DEFAULT_TAU_ACT: f64 = 1e-7;

/// A polynomial constraint system `g_i(x) <= bound_i`, `h_j(x) = 0`.
///
/// Inequalities are stored at baseline `g_i <= 0`; a perturbation raises the
/// bounds of the perturbable indices only, the rest stay at zero.
#[derive(Clone, Debug)]
pub struct ProblemInstance {
    name: String,
    num_vars: usize,
    inequalities: Vec<Differentiated>,
    equalities: Vec<Differentiated>,
    objective: Option<Differentiated>,
    perturbable: Vec<bool>,
    sample_box: Vec<(f64, f64)>,
}

impl ProblemInstance {
    pub fn new(
        name: impl Into<String>,
        num_vars: usize,
        inequalities: Vec<Polynomial>,
        equalities: Vec<Polynomial>,
    ) -> Result<Self> {
        if num_vars == 0 {
            return Err(Error::InvalidParameter("num_vars must be positive".into()));
        }
        for p in inequalities.iter().chain(&equalities) {
            if p.num_vars() != num_vars {
                return Err(Error::DimensionMismatch {
                    expected: num_vars,
                    got: p.num_vars(),
                });
            }
        }
        let m = inequalities.len();
        Ok(ProblemInstance {
            name: name.into(),
            num_vars,
            inequalities: inequalities.iter().map(Differentiated::new).collect(),
            equalities: equalities.iter().map(Differentiated::new).collect(),
            objective: None,
            perturbable: vec![true; m],
            sample_box: vec![(-1.0, 1.0); num_vars],
        })
    }

    pub fn with_objective(mut self, f: Polynomial) -> Result<Self> {
        if f.num_vars() != self.num_vars {
            return Err(Error::DimensionMismatch {
                expected: self.num_vars,
                got: f.num_vars(),
            });
        }
        self.objective = Some(Differentiated::new(&f));
        Ok(self)
    }

    /// Restricts the perturbable set `I` to the given zero-based indices.
    pub fn with_perturbable(mut self, indices: &[usize]) -> Result<Self> {
        let m = self.inequalities.len();
        let mut mask = vec![false; m];
        for &i in indices {
            if i >= m {
                return Err(Error::InvalidParameter(format!(
                    "perturbable index {i} out of range for {m} inequalities"
                )));
            }
            mask[i] = true;
        }
        self.perturbable = mask;
        Ok(self)
    }

    pub fn with_sample_box(mut self, sample_box: Vec<(f64, f64)>) -> Result<Self> {
        if sample_box.len() != self.num_vars {
            return Err(Error::DimensionMismatch {
                expected: self.num_vars,
                got: sample_box.len(),
            });
        }
        if sample_box
            .iter()
            .any(|&(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo < hi))
        {
            return Err(Error::InvalidParameter(
                "sample box intervals must satisfy lo < hi".into(),
            ));
        }
        self.sample_box = sample_box;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_inequalities(&self) -> usize {
        self.inequalities.len()
    }

    pub fn num_equalities(&self) -> usize {
        self.equalities.len()
    }

    pub fn inequality(&self, i: usize) -> &Differentiated {
        &self.inequalities[i]
    }

    pub fn equality(&self, j: usize) -> &Differentiated {
        &self.equalities[j]
    }

    pub fn inequalities(&self) -> impl Iterator<Item = &Polynomial> {
        self.inequalities.iter().map(|d| &d.value)
    }

    pub fn equalities(&self) -> impl Iterator<Item = &Polynomial> {
        self.equalities.iter().map(|d| &d.value)
    }

    pub fn objective(&self) -> Option<&Differentiated> {
        self.objective.as_ref()
    }

    pub fn is_perturbable(&self, i: usize) -> bool {
        self.perturbable[i]
    }

    /// Zero-based indices of the perturbable set `I`.
    pub fn perturbable(&self) -> Vec<usize> {
        (0..self.perturbable.len())
            .filter(|&i| self.perturbable[i])
            .collect()
    }

    pub fn sample_box(&self) -> &[(f64, f64)] {
        &self.sample_box
    }

    /// Maximum degree over all constraint polynomials.
    pub fn max_constraint_degree(&self) -> u32 {
        self.inequalities()
            .chain(self.equalities())
            .map(Polynomial::degree)
            .max()
            .unwrap_or(0)
    }

    /// Inequality bounds under `pert`.
    pub fn bounds(&self, pert: &PerturbationSpec) -> Result<Vec<f64>> {
        let m = self.num_inequalities();
        match pert {
            PerturbationSpec::Diagonal(alpha) => Ok(self
                .perturbable
                .iter()
                .map(|&p| if p { *alpha } else { 0.0 })
                .collect()),
            PerturbationSpec::Vector(mu) => {
                if mu.len() != m {
                    return Err(Error::DimensionMismatch {
                        expected: m,
                        got: mu.len(),
                    });
                }
                Ok(mu.clone())
            }
        }
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.num_vars {
            return Err(Error::DimensionMismatch {
                expected: self.num_vars,
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(())
    }
}

/// How the inequality bounds move away from zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum PerturbationSpec {
    /// Every perturbable constraint becomes `g_i <= alpha`.
    Diagonal(f64),
    /// Constraint `i` becomes `g_i <= mu_i`.
    Vector(Vec<f64>),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub ineq_violation: f64,
    pub eq_violation: f64,
}

impl Residual {
    pub fn max(&self) -> f64 {
        self.ineq_violation.max(self.eq_violation)
    }
}

pub fn feasibility_residual(
    prob: &ProblemInstance,
    pert: &PerturbationSpec,
    x: &[f64],
) -> Result<Residual> {
    prob.check_point(x)?;
    let bounds = prob.bounds(pert)?;
    let ineq_violation = prob
        .inequalities
        .iter()
        .zip(&bounds)
        .map(|(g, b)| g.eval(x) - b)
        .fold(0.0, f64::max);
    let eq_violation = prob
        .equalities
        .iter()
        .map(|h| h.eval(x).abs())
        .fold(0.0, f64::max);
    Ok(Residual {
        ineq_violation,
        eq_violation,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActiveSet {
    /// Zero-based, sorted.
    pub indices: Vec<usize>,
    pub tolerance: f64,
}

/// Indices with `bound_i - g_i(x) <= tau`. Rejects points violating any
/// constraint by more than `tau`.
pub fn active_set(
    prob: &ProblemInstance,
    pert: &PerturbationSpec,
    x: &[f64],
    tau: f64,
) -> Result<ActiveSet> {
    let res = feasibility_residual(prob, pert, x)?;
    if res.max() > tau {
        return Err(Error::Infeasible {
            violation: res.max(),
            tolerance: tau,
        });
    }
    let bounds = prob.bounds(pert)?;
    let indices = prob
        .inequalities
        .iter()
        .zip(&bounds)
        .enumerate()
        .filter(|(_, (g, b))| *b - g.eval(x) <= tau)
        .map(|(i, _)| i)
        .collect();
    Ok(ActiveSet {
        indices,
        tolerance: tau,
    })
}
