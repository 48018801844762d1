//! Self-adequacy of a fixed island design under one realization.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ValidatorError;
use crate::formulation::{power_flow_block, DesignVars, PartitionSolution};
use crate::milp::MilpModel;
use crate::network::{FeederNetwork, PartitionGraph, TopologyReport};
use crate::scenario::{Scenario, ScenarioSet};
use crate::solver::{solve_lp, LpStatus};

/// A solution's islands frozen over its network, ready to be tested against
/// realizations given in partition-graph vertex order.
#[derive(Clone, Debug)]
pub struct DesignChecker<'a> {
    net: &'a FeederNetwork,
    graph: PartitionGraph,
    bn: Vec<bool>,
    be: Vec<bool>,
    rho: f64,
}

impl<'a> DesignChecker<'a> {
    pub fn new(sol: &PartitionSolution, net: &'a FeederNetwork) -> Result<Self, ValidatorError> {
        let graph = PartitionGraph::new(net);
        let (bn, be) = sol.masks(&graph)?;
        if !(sol.rho > 0.0 && sol.rho <= 1.0) {
            return Err(ValidatorError::Domain(format!("solution records rho = {}", sol.rho)));
        }
        Ok(Self {
            net,
            graph,
            bn,
            be,
            rho: sol.rho,
        })
    }

    pub fn graph(&self) -> &PartitionGraph {
        &self.graph
    }

    pub fn topology(&self) -> Result<TopologyReport, ValidatorError> {
        Ok(self.graph.check_topology(&self.bn, &self.be, &self.graph.grid_formers)?)
    }

    /// Re-orders a scenario set onto this checker's vertices.
    pub fn align(&self, set: &ScenarioSet) -> Result<ScenarioSet, ValidatorError> {
        Ok(set.for_graph(self.net, &self.graph)?)
    }

    /// Whether a dispatch exists that serves at least `rho` of every
    /// energized load with the islands as designed.
    pub fn feasible(&self, xi: &Scenario) -> Result<bool, ValidatorError> {
        Ok(self.served(xi)?.is_some())
    }

    /// Largest total active load a feasible dispatch serves, or `None` when
    /// no dispatch meets the `rho` floor.
    pub fn served(&self, xi: &Scenario) -> Result<Option<f64>, ValidatorError> {
        if !self.bn.iter().any(|&b| b) {
            return Ok(Some(0.0));
        }
        let g = &self.graph;
        let mut m = MilpModel::new("adequacy");
        let fixed = |m: &mut MilpModel, name: String, on: bool| {
            let x = if on { 1.0 } else { 0.0 };
            let v = m.add_binary(name)?;
            m.set_bounds(v, x, x).map(|_| v)
        };
        let mut d = DesignVars::default();
        for (v, name) in g.vertices.iter().enumerate() {
            d.b_n.push(fixed(&mut m, format!("bn[{name}]"), self.bn[v])?);
        }
        for e in 0..g.num_edges() {
            d.b_e.push(fixed(&mut m, format!("be[{e}]"), self.be[e])?);
        }
        let sv = power_flow_block(&mut m, g, self.net, xi, &d, "check")?;
        for v in 0..g.num_vertices() {
            let on = if self.bn[v] { 1.0 } else { 0.0 };
            m.set_bounds(sv.p_d[v], self.rho * xi.dp[v] * on, xi.dp[v] * on)?;
            m.set_bounds(sv.q_d[v], self.rho * xi.dq[v] * on, xi.dq[v] * on)?;
        }
        m.set_objective(sv.p_d.iter().map(|&p| (p, -1.0)).collect())?;
        let lp = solve_lp(&m)?;
        Ok((lp.status == LpStatus::Optimal).then_some(-lp.objective))
    }
}

/// Outcome of checking a design against a batch of realizations.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ViolationCount {
    pub total: u64,
    /// Realizations without a feasible dispatch; numerical failures count here
    /// too.
    pub infeasible: u64,
    pub numerical_failures: u64,
    /// Active load served summed over feasible realizations.
    pub served: f64,
}

impl ViolationCount {
    pub fn q_hat(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.infeasible as f64 / self.total as f64
        }
    }

    /// Sample estimate of minus the expected load served, zero served on
    /// infeasible realizations.
    pub fn objective(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            -self.served / self.total as f64
        }
    }
}

/// Checks every realization of `set` (already in the checker's vertex
/// order) concurrently.
pub fn estimate_violation(c: &DesignChecker<'_>, set: &ScenarioSet) -> ViolationCount {
    let outcomes: Vec<Result<Option<f64>, ValidatorError>> = set.scenarios.par_iter().map(|xi| c.served(xi)).collect();
    let mut count = ViolationCount {
        total: outcomes.len() as u64,
        ..ViolationCount::default()
    };
    for o in outcomes {
        match o {
            Ok(Some(s)) => count.served += s,
            Ok(None) => count.infeasible += 1,
            Err(e) => {
                log::warn!("adequacy check failed: {e}");
                count.infeasible += 1;
                count.numerical_failures += 1;
            }
        }
    }
    count
}

/// Per-scenario verdicts on a solved partition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub topology_valid: bool,
    /// Indices of retained scenarios with no feasible dispatch.
    pub retained_infeasible: Vec<usize>,
    /// Indices of dropped scenarios that still report served load.
    pub dropped_serving: Vec<usize>,
    pub retained: usize,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.topology_valid && self.retained_infeasible.is_empty() && self.dropped_serving.is_empty()
    }
}

/// Re-checks a solution against the scenarios it was solved with: the
/// islands form a valid forest and every retained scenario admits a
/// dispatch on its own.
pub fn verify(sol: &PartitionSolution, net: &FeederNetwork, scenarios: &ScenarioSet) -> Result<VerifyReport, ValidatorError> {
    let c = DesignChecker::new(sol, net)?;
    let set = c.align(scenarios)?;
    if set.len() != sol.z.len() || sol.per_scenario.len() != sol.z.len() {
        return Err(ValidatorError::Mismatch(format!(
            "{} scenarios for a solution with {} retention flags",
            set.len(),
            sol.z.len()
        )));
    }
    let topology_valid = c.topology()?.is_valid();
    let verdicts: Vec<Result<bool, ValidatorError>> = set
        .scenarios
        .par_iter()
        .zip(&sol.z)
        .map(|(xi, &z)| if z == 1 { c.feasible(xi) } else { Ok(true) })
        .collect();
    let mut retained_infeasible = Vec::new();
    for (a, v) in verdicts.into_iter().enumerate() {
        if !v? {
            retained_infeasible.push(a);
        }
    }
    let dropped_serving = sol
        .per_scenario
        .iter()
        .enumerate()
        .filter(|(a, s)| sol.z[*a] == 0 && (s.served_p.abs() > 1e-9 || s.served_q.abs() > 1e-9))
        .map(|(a, _)| a)
        .collect();
    Ok(VerifyReport {
        topology_valid,
        retained_infeasible,
        dropped_serving,
        retained: sol.z.iter().filter(|&&z| z == 1).count(),
    })
}
