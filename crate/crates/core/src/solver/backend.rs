//! External MILP solvers driven through MPS files.
//!
//! A backend is a command template containing `{mps}` and `{sol}`. The
//! command must write a solution file of `name value` (or `name=value`) lines:
//!
//! ```text
//! status optimal
//! objective -1.5
//! x_0 1
//! flow_3 0.25
//! ```
//!
//! Variable names are the sanitized MPS column names; omitted variables are
//! read as zero. Every returned point is re-validated against the model.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::process::Command;
use std::time::Instant;

use super::bb::{relative_gap, MilpResult, MilpStatus};
use super::SolverError;
use crate::milp::{evaluate, export_mps, mps_names, Assignment, MilpModel};

#[derive(Clone, Debug, PartialEq)]
pub struct BackendCommand {
    pub template: String,
}

impl BackendCommand {
    pub fn new(template: impl Into<String>) -> Self {
        Self {
            template: template.into(),
        }
    }

    /// Program and arguments with placeholders substituted. Tokens are split
    /// on whitespace before substitution, so paths may contain spaces.
    pub fn argv(&self, mps: &str, sol: &str) -> Vec<String> {
        self.template
            .split_whitespace()
            .map(|t| t.replace("{mps}", mps).replace("{sol}", sol))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolutionFile {
    pub status: String,
    pub objective: Option<f64>,
    pub bound: Option<f64>,
    pub values: Vec<(String, f64)>,
}

pub fn parse_solution_file(text: &str) -> Result<SolutionFile, SolverError> {
    let mut out = SolutionFile {
        status: String::new(),
        objective: None,
        bound: None,
        values: Vec::new(),
    };
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let line = line.replacen('=', " ", 1);
        let mut it = line.split_whitespace();
        let (Some(key), Some(val), None) = (it.next(), it.next(), it.next()) else {
            return Err(SolverError::Backend(format!(
                "solution line {}: expected `name value`",
                k + 1
            )));
        };
        if key == "status" {
            out.status = val.to_string();
            continue;
        }
        let v: f64 = val.parse().map_err(|_| {
            SolverError::Backend(format!("solution line {}: bad number `{val}`", k + 1))
        })?;
        match key {
            "objective" => out.objective = Some(v),
            "bound" => out.bound = Some(v),
            _ => out.values.push((key.to_string(), v)),
        }
    }
    if out.status.is_empty() {
        return Err(SolverError::Backend("solution file has no status line".into()));
    }
    Ok(out)
}

/// Writes a solution in the backend format, using MPS column names.
pub fn write_solution_file(m: &MilpModel, r: &MilpResult) -> String {
    let status = match r.status {
        MilpStatus::Optimal => "optimal",
        MilpStatus::Feasible => "feasible",
        MilpStatus::Infeasible => "infeasible",
        MilpStatus::TimeLimit => "time_limit",
    };
    let mut s = format!("status {status}\n");
    if let Some(a) = &r.incumbent {
        let _ = writeln!(s, "objective {}", r.objective);
        if r.bound.is_finite() {
            let _ = writeln!(s, "bound {}", r.bound);
        }
        let (cols, _) = mps_names(m);
        for (name, v) in cols.iter().zip(a.values()) {
            let _ = writeln!(s, "{name} {v}");
        }
    }
    s
}

/// Exports `m`, runs the backend, and validates what it returns.
pub fn solve_via_backend(m: &MilpModel, backend: &BackendCommand) -> Result<MilpResult, SolverError> {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| SolverError::Backend(format!("temp dir: {e}")))?;
    let mps_path = dir.path().join("model.mps");
    let sol_path = dir.path().join("model.sol");
    std::fs::write(&mps_path, export_mps(m))
        .map_err(|e| SolverError::Backend(format!("writing MPS: {e}")))?;
    let argv = backend.argv(&mps_path.to_string_lossy(), &sol_path.to_string_lossy());
    let Some((prog, args)) = argv.split_first() else {
        return Err(SolverError::Backend("empty backend command".into()));
    };
    let out = Command::new(prog)
        .args(args)
        .output()
        .map_err(|e| SolverError::Backend(format!("launching `{prog}`: {e}")))?;
    let text = std::fs::read_to_string(&sol_path).map_err(|e| {
        SolverError::Backend(format!(
            "backend wrote no solution file (exit {:?}): {e}; stderr: {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr).trim()
        ))
    })?;
    let sol = parse_solution_file(&text)?;
    read_back(m, &sol, start)
}

fn read_back(m: &MilpModel, sol: &SolutionFile, start: Instant) -> Result<MilpResult, SolverError> {
    let status = match sol.status.as_str() {
        "optimal" => MilpStatus::Optimal,
        "feasible" => MilpStatus::Feasible,
        "infeasible" => MilpStatus::Infeasible,
        "time_limit" => MilpStatus::TimeLimit,
        s => return Err(SolverError::Backend(format!("unknown backend status `{s}`"))),
    };
    if status == MilpStatus::Infeasible || sol.values.is_empty() && sol.objective.is_none() {
        return Ok(MilpResult {
            status,
            incumbent: None,
            objective: f64::INFINITY,
            bound: if status == MilpStatus::Infeasible { f64::INFINITY } else { f64::NEG_INFINITY },
            gap: f64::INFINITY,
            nodes_explored: 0,
            lp_iterations: 0,
            abandoned_nodes: 0,
            wall_time: start.elapsed(),
        });
    }
    let (cols, _) = mps_names(m);
    let index: HashMap<&str, usize> = cols.iter().enumerate().map(|(j, n)| (n.as_str(), j)).collect();
    let mut vals = vec![0.0; m.num_vars()];
    for (name, v) in &sol.values {
        let j = index
            .get(name.as_str())
            .ok_or_else(|| SolverError::Backend(format!("unknown variable `{name}` in solution")))?;
        vals[*j] = *v;
    }
    let a = Assignment(vals);
    let e = evaluate(m, &a).map_err(|e| SolverError::Backend(e.to_string()))?;
    if !e.feasible {
        return Err(SolverError::Backend(format!(
            "backend solution failed validation (violation {:e} at {})",
            e.max_violation,
            e.worst.unwrap_or_default()
        )));
    }
    if let Some(reported) = sol.objective {
        if (reported - e.objective).abs() > 1e-6 * e.objective.abs().max(1.0) {
            log::warn!("backend objective {reported} differs from recomputed {}", e.objective);
        }
    }
    let bound = match (sol.bound, status) {
        (Some(b), _) => b.min(e.objective),
        (None, MilpStatus::Optimal) => e.objective,
        (None, _) => f64::NEG_INFINITY,
    };
    Ok(MilpResult {
        status,
        incumbent: Some(a),
        objective: e.objective,
        bound,
        gap: relative_gap(e.objective, bound),
        nodes_explored: 0,
        lp_iterations: 0,
        abandoned_nodes: 0,
        wall_time: start.elapsed(),
    })
}
