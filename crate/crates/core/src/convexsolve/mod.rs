//! Small dense convex solvers: a simplex LP solver and a capped-simplex
//! concave QP solver.

mod lp;
mod qp;

use serde::{Deserialize, Serialize};

pub use lp::{kkt_residual as lp_kkt_residual, solve_lp, LpProblem, LpSolution};
pub use qp::{project_capped_simplex, solve_capped_simplex_qp, CappedSimplexQp, QpSolution};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    IterLimit,
}
