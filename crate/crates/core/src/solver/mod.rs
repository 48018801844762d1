//! LP and MILP solving: sparse LU, bounded dual simplex, branch and bound, and
//! an external-solver seam through MPS files.

pub mod backend;
pub mod bb;
pub mod lu;
pub mod lp;
pub mod simplex;
pub mod sparse;

pub use backend::{parse_solution_file, solve_via_backend, write_solution_file, BackendCommand};
pub use bb::{
    relative_gap, solve_milp, BranchingRule, MilpResult, MilpStatus, NodeOrder, SolveOptions,
};
pub use lp::{solve_lp, solve_lp_with, LpResult, LpStatus};
pub use simplex::{Basis, DualSimplex, LpProblem, SimplexOptions, SimplexStatus};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("numerical breakdown: {0}")]
    Numerical(String),
    #[error("simplex iteration limit reached")]
    IterationLimit,
    #[error("time limit reached")]
    TimeLimit,
    #[error("backend: {0}")]
    Backend(String),
}

impl SolverError {
    pub(crate) fn from_status(s: SimplexStatus) -> Self {
        match s {
            SimplexStatus::Numerical(msg) => SolverError::Numerical(msg),
            SimplexStatus::IterationLimit => SolverError::IterationLimit,
            SimplexStatus::TimeLimit => SolverError::TimeLimit,
            SimplexStatus::Optimal | SimplexStatus::Infeasible => {
                SolverError::Numerical(format!("unexpected status {s:?}"))
            }
        }
    }
}
