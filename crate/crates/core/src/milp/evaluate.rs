use serde::{Deserialize, Serialize};

use super::model::{Assignment, MilpModel, ModelError};

/// Absolute feasibility tolerance used when none is given.
pub const DEFAULT_FEAS_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub feasible: bool,
    pub max_violation: f64,
    pub objective: f64,
    /// Name of the constraint, bound or integrality condition with the largest violation.
    pub worst: Option<String>,
}

/// Checks `a` against every constraint, variable bound and binary domain of `m`.
pub fn evaluate(m: &MilpModel, a: &Assignment) -> Result<Evaluation, ModelError> {
    evaluate_with_tol(m, a, DEFAULT_FEAS_TOL)
}

pub fn evaluate_with_tol(m: &MilpModel, a: &Assignment, tol: f64) -> Result<Evaluation, ModelError> {
    let x = a.values();
    if x.len() != m.num_vars() {
        return Err(ModelError::AssignmentSize {
            expected: m.num_vars(),
            got: x.len(),
        });
    }
    if let Some(i) = x.iter().position(|v| v.is_nan()) {
        return Err(ModelError::MissingValue(m.variables()[i].name.clone()));
    }

    let mut max_violation = 0.0_f64;
    let mut worst = None;
    let mut record = |viol: f64, what: &dyn Fn() -> String| {
        if viol > max_violation {
            max_violation = viol;
            worst = Some(what());
        }
    };

    for c in m.constraints() {
        let viol = c.violation(c.activity(x));
        record(viol, &|| c.name.clone());
    }
    for (v, &val) in m.variables().iter().zip(x) {
        let viol = (v.lower - val).max(val - v.upper).max(0.0);
        record(viol, &|| format!("bound({})", v.name));
        if v.is_binary() {
            record((val - val.round()).abs(), &|| format!("integrality({})", v.name));
        }
    }

    Ok(Evaluation {
        feasible: max_violation <= tol,
        max_violation,
        objective: m.objective_value(x),
        worst,
    })
}
