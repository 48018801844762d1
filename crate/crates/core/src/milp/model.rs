use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Handle to a variable registered in a [`MilpModel`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VarId(pub usize);

/// Handle to a constraint registered in a [`MilpModel`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ConsId(pub usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl ConsId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

impl Variable {
    pub fn is_binary(&self) -> bool {
        self.kind == VarKind::Binary
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = ">=")]
    Ge,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearConstraint {
    pub name: String,
    pub terms: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl LinearConstraint {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, c)| c * values[v.0]).sum()
    }

    /// Amount by which `activity` misses the constraint, zero when satisfied.
    pub fn violation(&self, activity: f64) -> f64 {
        match self.sense {
            Sense::Le => (activity - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - activity).max(0.0),
            Sense::Eq => (activity - self.rhs).abs(),
        }
    }

    /// Row activity interval `[lo, hi]` implied by the sense.
    pub fn row_bounds(&self) -> (f64, f64) {
        match self.sense {
            Sense::Le => (f64::NEG_INFINITY, self.rhs),
            Sense::Ge => (self.rhs, f64::INFINITY),
            Sense::Eq => (self.rhs, self.rhs),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("variable `{name}` has lower bound {lower} above upper bound {upper}")]
    InvertedBounds { name: String, lower: f64, upper: f64 },
    #[error("binary variable `{name}` has bounds [{lower}, {upper}] outside [0, 1]")]
    BinaryBounds { name: String, lower: f64, upper: f64 },
    #[error("variable `{name}` has a NaN bound")]
    NanBound { name: String },
    #[error("constraint `{constraint}` references unknown variable {var}")]
    UnknownVariable { constraint: String, var: usize },
    #[error("constraint `{constraint}` lists variable `{var}` more than once")]
    DuplicateTerm { constraint: String, var: String },
    #[error("constraint `{constraint}` has a non-finite coefficient or rhs")]
    NonFinite { constraint: String },
    #[error("variable `{0}` is not binary")]
    NotBinary(String),
    #[error("bounds [{lo}, {hi}] for a product factor must be finite and ordered")]
    BadProductBounds { lo: f64, hi: f64 },
    #[error("assignment has {got} values but the model has {expected} variables")]
    AssignmentSize { expected: usize, got: usize },
    #[error("assignment is missing a value for variable `{0}`")]
    MissingValue(String),
}

/// Sparse linear expression that merges repeated variables.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinExpr {
    terms: Vec<(VarId, f64)>,
}

impl LinExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn term(var: VarId, coef: f64) -> Self {
        let mut e = Self::new();
        e.add(var, coef);
        e
    }

    pub fn add(&mut self, var: VarId, coef: f64) -> &mut Self {
        if let Some(t) = self.terms.iter_mut().find(|t| t.0 == var) {
            t.1 += coef;
        } else {
            self.terms.push((var, coef));
        }
        self
    }

    pub fn with(mut self, var: VarId, coef: f64) -> Self {
        self.add(var, coef);
        self
    }

    pub fn terms(&self) -> &[(VarId, f64)] {
        &self.terms
    }

    pub fn into_terms(self) -> Vec<(VarId, f64)> {
        self.terms.into_iter().filter(|t| t.1 != 0.0).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

/// A minimization MILP over continuous and binary variables.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MilpModel {
    pub name: String,
    pub notes: Vec<String>,
    vars: Vec<Variable>,
    cons: Vec<LinearConstraint>,
    objective: Vec<(VarId, f64)>,
}

impl MilpModel {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ..Self::default()
        }
    }

    pub fn add_var(
        &mut self,
        name: impl Into<String>,
        kind: VarKind,
        lower: f64,
        upper: f64,
    ) -> Result<VarId, ModelError> {
        let name = name.into();
        if lower.is_nan() || upper.is_nan() {
            return Err(ModelError::NanBound { name });
        }
        if lower > upper {
            return Err(ModelError::InvertedBounds { name, lower, upper });
        }
        if kind == VarKind::Binary && (lower < 0.0 || upper > 1.0) {
            return Err(ModelError::BinaryBounds { name, lower, upper });
        }
        self.vars.push(Variable {
            name,
            kind,
            lower,
            upper,
        });
        Ok(VarId(self.vars.len() - 1))
    }

    pub fn add_continuous(
        &mut self,
        name: impl Into<String>,
        lower: f64,
        upper: f64,
    ) -> Result<VarId, ModelError> {
        self.add_var(name, VarKind::Continuous, lower, upper)
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> Result<VarId, ModelError> {
        self.add_var(name, VarKind::Binary, 0.0, 1.0)
    }

    /// Registers `terms sense rhs`. Zero coefficients are dropped.
    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(VarId, f64)>,
        sense: Sense,
        rhs: f64,
    ) -> Result<ConsId, ModelError> {
        let name = name.into();
        if !rhs.is_finite() {
            return Err(ModelError::NonFinite { constraint: name });
        }
        let mut seen = std::collections::HashSet::with_capacity(terms.len());
        for &(v, c) in &terms {
            if v.0 >= self.vars.len() {
                return Err(ModelError::UnknownVariable {
                    constraint: name,
                    var: v.0,
                });
            }
            if !c.is_finite() {
                return Err(ModelError::NonFinite { constraint: name });
            }
            if !seen.insert(v) {
                return Err(ModelError::DuplicateTerm {
                    constraint: name,
                    var: self.vars[v.0].name.clone(),
                });
            }
        }
        let terms = terms.into_iter().filter(|t| t.1 != 0.0).collect();
        self.cons.push(LinearConstraint {
            name,
            terms,
            sense,
            rhs,
        });
        Ok(ConsId(self.cons.len() - 1))
    }

    pub fn add_expr_constraint(
        &mut self,
        name: impl Into<String>,
        expr: LinExpr,
        sense: Sense,
        rhs: f64,
    ) -> Result<ConsId, ModelError> {
        self.add_constraint(name, expr.into_terms(), sense, rhs)
    }

    /// Replaces the (minimization) objective.
    pub fn set_objective(&mut self, terms: Vec<(VarId, f64)>) -> Result<(), ModelError> {
        let mut expr = LinExpr::new();
        for (v, c) in terms {
            if v.0 >= self.vars.len() {
                return Err(ModelError::UnknownVariable {
                    constraint: "objective".into(),
                    var: v.0,
                });
            }
            if !c.is_finite() {
                return Err(ModelError::NonFinite {
                    constraint: "objective".into(),
                });
            }
            expr.add(v, c);
        }
        self.objective = expr.into_terms();
        Ok(())
    }

    pub fn set_bounds(&mut self, var: VarId, lower: f64, upper: f64) -> Result<(), ModelError> {
        let v = &mut self.vars[var.0];
        if lower > upper {
            return Err(ModelError::InvertedBounds {
                name: v.name.clone(),
                lower,
                upper,
            });
        }
        if v.kind == VarKind::Binary && (lower < 0.0 || upper > 1.0) {
            return Err(ModelError::BinaryBounds {
                name: v.name.clone(),
                lower,
                upper,
            });
        }
        v.lower = lower;
        v.upper = upper;
        Ok(())
    }

    pub fn variables(&self) -> &[Variable] {
        &self.vars
    }

    pub fn variable(&self, id: VarId) -> &Variable {
        &self.vars[id.0]
    }

    pub fn constraints(&self) -> &[LinearConstraint] {
        &self.cons
    }

    pub fn constraint(&self, id: ConsId) -> &LinearConstraint {
        &self.cons[id.0]
    }

    pub fn objective(&self) -> &[(VarId, f64)] {
        &self.objective
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.cons.len()
    }

    pub fn num_binaries(&self) -> usize {
        self.vars.iter().filter(|v| v.is_binary()).count()
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective.iter().map(|&(v, c)| c * values[v.0]).sum()
    }

    pub fn find_var(&self, name: &str) -> Option<VarId> {
        self.vars.iter().position(|v| v.name == name).map(VarId)
    }

    /// Structured text listing of every constraint, for debugging.
    pub fn debug_dump(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "model {} : {} vars ({} binary), {} constraints",
            self.name,
            self.num_vars(),
            self.num_binaries(),
            self.num_constraints()
        );
        for n in &self.notes {
            let _ = writeln!(out, "# {n}");
        }
        let _ = write!(out, "min");
        for &(v, c) in &self.objective {
            let _ = write!(out, " {:+} {}", c, self.vars[v.0].name);
        }
        let _ = writeln!(out);
        for c in &self.cons {
            let _ = write!(out, "{}:", c.name);
            for &(v, a) in &c.terms {
                let _ = write!(out, " {:+} {}", a, self.vars[v.0].name);
            }
            let _ = writeln!(out, " {} {}", c.sense, c.rhs);
        }
        for v in &self.vars {
            let kind = match v.kind {
                VarKind::Binary => "bin",
                VarKind::Continuous => "cont",
            };
            let _ = writeln!(out, "{} {} in [{}, {}]", kind, v.name, v.lower, v.upper);
        }
        out
    }
}

/// A value for every model variable, indexed by [`VarId`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assignment(pub Vec<f64>);

impl Assignment {
    pub fn zeros(model: &MilpModel) -> Self {
        Assignment(vec![0.0; model.num_vars()])
    }

    pub fn get(&self, v: VarId) -> f64 {
        self.0[v.0]
    }

    pub fn set(&mut self, v: VarId, value: f64) {
        self.0[v.0] = value;
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

impl std::ops::Index<VarId> for Assignment {
    type Output = f64;
    fn index(&self, v: VarId) -> &f64 {
        &self.0[v.0]
    }
}
