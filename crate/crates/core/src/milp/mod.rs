//! Solver-neutral MILP intermediate representation.

pub mod evaluate;
pub mod mccormick;
pub mod model;
pub mod mps;

pub use evaluate::{evaluate, evaluate_with_tol, Evaluation, DEFAULT_FEAS_TOL};
pub use mccormick::{mccormick_expr, mccormick_product};
pub use model::{
    Assignment, ConsId, LinExpr, LinearConstraint, MilpModel, ModelError, Sense, VarId, VarKind,
    Variable,
};
pub use mps::{export_mps, import_mps, mps_names, MpsError};
