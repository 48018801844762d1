//! Out-of-sample checks of a partition: violation estimates with an upper
//! confidence limit, and the order-statistic lower bound on the optimum.

mod feasibility;
mod stats;

pub use feasibility::{estimate_violation, verify, DesignChecker, VerifyReport, ViolationCount};
pub use stats::{
    binom_cdf, inv_normal_cdf, lower_bound, order_index, theta, upper_bound, BinomConvention, LowerBoundReport, ValidationReport,
};

use thiserror::Error;

use crate::formulation::{FormulationError, SolutionError};
use crate::milp::ModelError;
use crate::network::{FeederNetwork, NetworkError};
use crate::scenario::{Scenario, ScenarioError};
use crate::solver::SolverError;

#[derive(Debug, Error)]
pub enum ValidatorError {
    #[error("{0}")]
    Domain(String),
    #[error("{0}")]
    Mismatch(String),
    #[error(transparent)]
    Solution(#[from] SolutionError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Formulation(#[from] FormulationError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// One-off form of [`DesignChecker::feasible`]; `xi` is in partition-graph
/// vertex order.
pub fn scenario_feasible(sol: &crate::formulation::PartitionSolution, net: &FeederNetwork, xi: &Scenario) -> Result<bool, ValidatorError> {
    DesignChecker::new(sol, net)?.feasible(xi)
}
