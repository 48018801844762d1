//! Exact linearization of `z = x * y` for binary `x` and bounded continuous `y`.
//!
//! With `y` in `[lo, hi]` the four envelope inequalities
//!
//! ```text
//! x*lo <= z <= x*hi
//! y + (x - 1)*hi <= z <= y + (x - 1)*lo
//! ```
//!
//! pin `z = 0` when `x = 0` and `z = y` when `x = 1`.

use super::model::{LinExpr, MilpModel, ModelError, Sense, VarId};

/// Adds `z = x * y` and returns `z`.
pub fn mccormick_product(
    m: &mut MilpModel,
    x: VarId,
    y: VarId,
    y_lo: f64,
    y_hi: f64,
) -> Result<VarId, ModelError> {
    let name = format!("{}*{}", m.variable(x).name, m.variable(y).name);
    mccormick_expr(m, &name, x, &LinExpr::term(y, 1.0), y_lo, y_hi)
}

/// Adds `z = x * (affine expression y)` where `y` ranges over `[y_lo, y_hi]`.
/// Constraint names are `{name}_xlo`, `{name}_xhi`, `{name}_ylo`, `{name}_yhi`.
pub fn mccormick_expr(
    m: &mut MilpModel,
    name: &str,
    x: VarId,
    y: &LinExpr,
    y_lo: f64,
    y_hi: f64,
) -> Result<VarId, ModelError> {
    if !m.variable(x).is_binary() {
        return Err(ModelError::NotBinary(m.variable(x).name.clone()));
    }
    if !(y_lo.is_finite() && y_hi.is_finite()) || y_lo > y_hi {
        return Err(ModelError::BadProductBounds { lo: y_lo, hi: y_hi });
    }
    if y.terms().iter().any(|t| t.0 == x) {
        return Err(ModelError::DuplicateTerm {
            constraint: name.to_string(),
            var: m.variable(x).name.clone(),
        });
    }

    let z = m.add_continuous(name.to_string(), y_lo.min(0.0), y_hi.max(0.0))?;

    // x*lo <= z <= x*hi
    m.add_constraint(format!("{name}_xlo"), vec![(z, 1.0), (x, -y_lo)], Sense::Ge, 0.0)?;
    m.add_constraint(format!("{name}_xhi"), vec![(z, 1.0), (x, -y_hi)], Sense::Le, 0.0)?;

    // z - y - hi*x >= -hi  and  z - y - lo*x <= -lo
    let mut lo_row = LinExpr::term(z, 1.0);
    let mut hi_row = LinExpr::term(z, 1.0);
    for &(v, c) in y.terms() {
        lo_row.add(v, -c);
        hi_row.add(v, -c);
    }
    lo_row.add(x, -y_hi);
    hi_row.add(x, -y_lo);
    m.add_expr_constraint(format!("{name}_ylo"), lo_row, Sense::Ge, -y_hi)?;
    m.add_expr_constraint(format!("{name}_yhi"), hi_row, Sense::Le, -y_lo)?;
    Ok(z)
}
