//! Decreasing sequence of diagonal levels, each warm-started from the
//! previous solution with the penalty reset to `beta0`.

use serde::{Deserialize, Serialize};

use super::{run_esqm, EsqmParams, EsqmTrace};
use crate::error::{Error, Result};
use crate::model::{feasibility_residual, PerturbationSpec, ProblemInstance};
use crate::poly::Differentiated;

/// Final violation above which a level is declared infeasible.
pub const INFEASIBLE_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LevelStatus {
    Solved,
    /// Feasible but not converged; the level may be singular.
    Stalled,
    Infeasible,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomotopyLevel {
    pub alpha: f64,
    pub x: Vec<f64>,
    pub value: f64,
    pub status: LevelStatus,
    pub violation: f64,
    pub trace: EsqmTrace,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomotopyTrace {
    pub levels: Vec<HomotopyLevel>,
}

impl HomotopyTrace {
    pub fn values(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.value).collect()
    }

    pub fn stalled_levels(&self) -> Vec<f64> {
        self.levels
            .iter()
            .filter(|l| l.status == LevelStatus::Stalled)
            .map(|l| l.alpha)
            .collect()
    }

    /// `alpha, x1..xn, value, status, iterations, final_beta`.
    pub fn to_csv(&self) -> String {
        let n = self.levels.first().map_or(0, |l| l.x.len());
        let mut out = String::from("alpha");
        for i in 0..n {
            out.push_str(&format!(",x{}", i + 1));
        }
        out.push_str(",value,status,iterations,final_beta\n");
        for l in &self.levels {
            out.push_str(&format!("{:e}", l.alpha));
            for v in &l.x {
                out.push_str(&format!(",{v:e}"));
            }
            out.push_str(&format!(
                ",{:e},{:?},{},{:e}\n",
                l.value,
                l.status,
                l.trace.step_norms.len(),
                l.trace.betas.last().copied().unwrap_or(f64::NAN)
            ));
        }
        out
    }
}

/// Solves every level of the strictly decreasing, positive `schedule`.
/// `template.alpha` is ignored.
pub fn homotopy_run(
    prob: &ProblemInstance,
    f: &Differentiated,
    x0: &[f64],
    schedule: &[f64],
    template: &EsqmParams,
) -> Result<HomotopyTrace> {
    if schedule.is_empty() {
        return Err(Error::InvalidParameter("empty schedule".into()));
    }
    if schedule.iter().any(|&a| !(a > 0.0 && a.is_finite()))
        || schedule.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(Error::InvalidParameter(
            "schedule must be positive and strictly decreasing".into(),
        ));
    }
    let mut levels = Vec::with_capacity(schedule.len());
    let mut start = x0.to_vec();
    for &alpha in schedule {
        let params = EsqmParams {
            alpha,
            ..template.clone()
        };
        let trace = run_esqm(prob, f, &start, &params)?;
        let x = trace.final_x().to_vec();
        let violation = feasibility_residual(prob, &PerturbationSpec::Diagonal(alpha), &x)?.max();
        let status = if violation > INFEASIBLE_TOL {
            LevelStatus::Infeasible
        } else if trace.converged() {
            LevelStatus::Solved
        } else {
            LevelStatus::Stalled
        };
        if status != LevelStatus::Infeasible {
            start = x.clone();
        }
        levels.push(HomotopyLevel {
            alpha,
            value: f.eval(&x),
            x,
            status,
            violation,
            trace,
        });
    }
    Ok(HomotopyTrace { levels })
}
