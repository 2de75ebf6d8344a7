//! JSON problem documents.
//!
//! ```json
//! {
//!   "name": "cusp",
//!   "num_vars": 2,
//!   "inequalities": [
//!     [{"coef": 1.0, "exps": [3, 0]}, {"coef": 1.0, "exps": [0, 1]}],
//!     [{"coef": 1.0, "exps": [3, 0]}, {"coef": -1.0, "exps": [0, 1]}]
//!   ],
//!   "perturbable": [1, 2],
//!   "sample_box": [[-2.0, 1.0], [-2.0, 1.0]]
//! }
//! ```
//!
//! `objective`, `equalities`, `perturbable` (one-based, default all),
//! `sample_box`, `description` and `provenance` are optional.

use std::path::Path;

use qualpert_core::{Monomial, Polynomial, ProblemInstance};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub coef: f64,
    pub exps: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemDocument {
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub provenance: String,
    pub num_vars: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<Vec<Term>>,
    pub inequalities: Vec<Vec<Term>>,
    #[serde(default)]
    pub equalities: Vec<Vec<Term>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbable: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_box: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum DocumentError {
    #[error("cannot read {path}: {msg}")]
    Io { path: String, msg: String },
    #[error("malformed JSON at line {line}, column {column}: {msg}")]
    Malformed {
        line: usize,
        column: usize,
        msg: String,
    },
    #[error("schema violation at {path}: {msg}")]
    Schema { path: String, msg: String },
    #[error("index out of range at {path}: {index} is not in 1..={max}")]
    IndexOutOfRange {
        path: String,
        index: usize,
        max: usize,
    },
    #[error("exponent length mismatch at {path} (term {term}): expected {expected} exponents, got {got}")]
    ExpsLength {
        path: String,
        term: usize,
        expected: usize,
        got: usize,
    },
    #[error("invalid value at {path}: {msg}")]
    Invalid { path: String, msg: String },
}

fn json_path(p: &serde_path_to_error::Path) -> String {
    let s = p.to_string();
    if s == "." {
        "$".into()
    } else {
        format!("$.{s}")
    }
}

fn polynomial(terms: &[Term], n: usize, path: &str) -> Result<Polynomial, DocumentError> {
    for (t, term) in terms.iter().enumerate() {
        if term.exps.len() != n {
            return Err(DocumentError::ExpsLength {
                path: format!("{path}[{t}].exps"),
                term: t,
                expected: n,
                got: term.exps.len(),
            });
        }
        if !term.coef.is_finite() {
            return Err(DocumentError::Invalid {
                path: format!("{path}[{t}].coef"),
                msg: "coefficient must be finite".into(),
            });
        }
    }
    let monos = terms
        .iter()
        .map(|t| Monomial::new(t.coef, t.exps.clone()))
        .collect();
    Polynomial::new(n, monos).map_err(|e| DocumentError::Invalid {
        path: path.into(),
        msg: e.to_string(),
    })
}

fn terms_of(p: &Polynomial) -> Vec<Term> {
    p.terms()
        .iter()
        .map(|m| Term {
            coef: m.coef,
            exps: m.exps.clone(),
        })
        .collect()
}

impl ProblemDocument {
    pub fn from_json(text: &str) -> Result<Self, DocumentError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| DocumentError::Malformed {
                line: e.line(),
                column: e.column(),
                msg: e.to_string(),
            })?;
        serde_path_to_error::deserialize(value).map_err(|e| DocumentError::Schema {
            path: json_path(e.path()),
            msg: e.inner().to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("documents serialize")
    }

    pub fn from_instance(prob: &ProblemInstance, description: &str, provenance: &str) -> Self {
        ProblemDocument {
            name: prob.name().to_string(),
            description: description.to_string(),
            provenance: provenance.to_string(),
            num_vars: prob.num_vars(),
            objective: prob.objective().map(|f| terms_of(&f.value)),
            inequalities: prob.inequalities().map(terms_of).collect(),
            equalities: prob.equalities().map(terms_of).collect(),
            perturbable: Some(prob.perturbable().iter().map(|i| i + 1).collect()),
            sample_box: Some(prob.sample_box().iter().map(|&(a, b)| [a, b]).collect()),
        }
    }

    pub fn to_instance(&self) -> Result<ProblemInstance, DocumentError> {
        let n = self.num_vars;
        if n == 0 {
            return Err(DocumentError::Invalid {
                path: "$.num_vars".into(),
                msg: "must be at least 1".into(),
            });
        }
        let ineq = self
            .inequalities
            .iter()
            .enumerate()
            .map(|(i, t)| polynomial(t, n, &format!("$.inequalities[{i}]")))
            .collect::<Result<Vec<_>, _>>()?;
        let eq = self
            .equalities
            .iter()
            .enumerate()
            .map(|(j, t)| polynomial(t, n, &format!("$.equalities[{j}]")))
            .collect::<Result<Vec<_>, _>>()?;
        let invalid = |path: &str| {
            let path = path.to_string();
            move |e: qualpert_core::Error| DocumentError::Invalid {
                path,
                msg: e.to_string(),
            }
        };
        let mut prob =
            ProblemInstance::new(self.name.clone(), n, ineq, eq).map_err(invalid("$"))?;
        if let Some(f) = &self.objective {
            prob = prob
                .with_objective(polynomial(f, n, "$.objective")?)
                .map_err(invalid("$.objective"))?;
        }
        if let Some(idx) = &self.perturbable {
            let m = self.inequalities.len();
            let mut zero_based = Vec::with_capacity(idx.len());
            for (k, &i) in idx.iter().enumerate() {
                if i == 0 || i > m {
                    return Err(DocumentError::IndexOutOfRange {
                        path: format!("$.perturbable[{k}]"),
                        index: i,
                        max: m,
                    });
                }
                zero_based.push(i - 1);
            }
            prob = prob
                .with_perturbable(&zero_based)
                .map_err(invalid("$.perturbable"))?;
        }
        if let Some(bx) = &self.sample_box {
            if bx.len() != n {
                return Err(DocumentError::Invalid {
                    path: "$.sample_box".into(),
                    msg: format!("expected {n} intervals, got {}", bx.len()),
                });
            }
            prob = prob
                .with_sample_box(bx.iter().map(|&[a, b]| (a, b)).collect())
                .map_err(invalid("$.sample_box"))?;
        }
        Ok(prob)
    }
}

pub fn parse_problem(text: &str) -> Result<ProblemInstance, DocumentError> {
    ProblemDocument::from_json(text)?.to_instance()
}

pub fn parse_problem_file(path: &Path) -> Result<ProblemInstance, DocumentError> {
    let text = std::fs::read_to_string(path).map_err(|e| DocumentError::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    })?;
    parse_problem(&text)
}
