//! Qualification analysis for perturbed polynomial constraint sets.
//!
//! * [`poly`]: sparse polynomials, derivatives, univariate roots.
//! * [`model`]: constraint systems, perturbations, active sets, the catalog.
//! * [`convexsolve`]: dense LP and capped-simplex QP solvers.
//! * [`qualification`]: pointwise and sampled MFCQ certificates.
//! * [`scanner`]: singular diagonal perturbations and their witnesses.
//! * [`esqm`]: the penalty SQP solver and the homotopy driver.

pub mod convexsolve;
pub mod error;
pub mod esqm;
pub mod model;
pub mod poly;
pub mod qualification;
pub mod scanner;

pub use error::{Error, Result};
pub use esqm::{EsqmParams, EsqmTrace, HomotopyTrace};
pub use model::{catalog, CatalogParams, PerturbationSpec, ProblemInstance};
pub use poly::{Differentiated, Monomial, Polynomial};
pub use qualification::{MfcqCertificate, MfcqTolerances, Verdict};
pub use scanner::{ScanReport, SingularWitness};
