use serde::{Deserialize, Serialize};

use super::simplex::{DualSimplex, LpProblem, SimplexOptions, SimplexStatus};
use super::sparse::CscMatrix;
use super::SolverError;
use crate::milp::MilpModel;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LpResult {
    pub status: LpStatus,
    /// Optimal value; `+inf` when infeasible and `-inf` when unbounded.
    pub objective: f64,
    pub primal: Vec<f64>,
    /// One dual per constraint, with reduced costs `c - A^T y`.
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    pub iterations: usize,
}

/// Solves the continuous relaxation of `m`.
pub fn solve_lp(m: &MilpModel) -> Result<LpResult, SolverError> {
    solve_lp_with(&LpProblem::from_model(m), &SimplexOptions::default())
}

pub fn solve_lp_with(p: &LpProblem, opts: &SimplexOptions) -> Result<LpResult, SolverError> {
    let mut s = DualSimplex::new(p);
    let status = s.solve(opts);
    let iterations = s.iterations();
    match status {
        SimplexStatus::Optimal => {
            if s.rests_on_artificial_bound() && has_improving_ray(p, opts)? {
                return Ok(LpResult {
                    status: LpStatus::Unbounded,
                    objective: f64::NEG_INFINITY,
                    primal: s.primal().to_vec(),
                    duals: vec![],
                    reduced_costs: vec![],
                    iterations,
                });
            }
            Ok(LpResult {
                status: LpStatus::Optimal,
                objective: s.objective(),
                primal: s.primal().to_vec(),
                duals: s.row_duals().to_vec(),
                reduced_costs: s.reduced_costs().to_vec(),
                iterations,
            })
        }
        SimplexStatus::Infeasible => Ok(LpResult {
            status: LpStatus::Infeasible,
            objective: f64::INFINITY,
            primal: vec![],
            duals: vec![],
            reduced_costs: vec![],
            iterations,
        }),
        other => Err(SolverError::from_status(other)),
    }
}

/// Looks for a direction `d` in the recession cone with `c^T d < 0`,
/// normalized to `|d_j| <= 1`.
fn has_improving_ray(p: &LpProblem, opts: &SimplexOptions) -> Result<bool, SolverError> {
    let n = p.ncols();
    let dir = |lo: f64, hi: f64| -> (f64, f64) {
        (
            if lo.is_finite() { 0.0 } else { -1.0 },
            if hi.is_finite() { 0.0 } else { 1.0 },
        )
    };
    let (col_lo, col_hi): (Vec<f64>, Vec<f64>) =
        (0..n).map(|j| dir(p.col_lo[j], p.col_hi[j])).unzip();
    let (row_lo, row_hi): (Vec<f64>, Vec<f64>) = (0..p.nrows())
        .map(|i| {
            (
                if p.row_lo[i].is_finite() { 0.0 } else { f64::NEG_INFINITY },
                if p.row_hi[i].is_finite() { 0.0 } else { f64::INFINITY },
            )
        })
        .unzip();
    let a = CscMatrix::clone(&p.a);
    let ray = LpProblem::new(a, p.cost.clone(), col_lo, col_hi, row_lo, row_hi);
    let mut s = DualSimplex::new(&ray);
    match s.solve(opts) {
        SimplexStatus::Optimal => Ok(s.objective() < -1e-9),
        SimplexStatus::Infeasible => Ok(false),
        other => Err(SolverError::from_status(other)),
    }
}
