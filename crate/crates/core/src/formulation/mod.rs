//! Optimal microgrid partitioning as a MILP: deterministic (single scenario,
//! every energized load served) and sampled chance-constrained variants.

pub mod blocks;
mod greedy;
mod solution;

pub use blocks::{
    chance_block, grid_forming_block, load_equality_block, power_flow_block, radiality_block, strengthening_block, topology_block,
};
pub use solution::{extract_solution, Microgrid, PartitionSolution, ScenarioOutcome, SolutionError};

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::milp::{evaluate, Assignment, MilpModel, ModelError, VarId};
use crate::network::{FeederNetwork, PartitionGraph};
use crate::scenario::{Scenario, ScenarioError, ScenarioSet};
use crate::solver::{solve_milp, solve_via_backend, BackendCommand, MilpResult, SolveOptions, SolverError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormulationError {
    #[error("partition graph has no vertices")]
    EmptyGraph,
    #[error("no grid-forming bus")]
    NoGridFormer,
    #[error("scenario has {got} buses, graph has {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("no scenarios")]
    NoScenarios,
    #[error("risk level gamma must lie in [0, 1), got {0}")]
    BadGamma(f64),
    #[error("adequacy fraction rho must lie in (0, 1], got {0}")]
    BadRho(f64),
    #[error("weights: {0}")]
    BadWeights(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Scenarios(#[from] ScenarioError),
}

/// Topology decisions shared by every scenario.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DesignVars {
    pub b_n: Vec<VarId>,
    pub b_e: Vec<VarId>,
    pub theta: Vec<VarId>,
    pub f: Vec<VarId>,
    pub f_prime: Vec<VarId>,
}

/// Dispatch of one scenario. `u[e]` is the product of `b_e[e]` with the
/// voltage difference across edge `e`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ScenarioVars {
    pub v: Vec<VarId>,
    pub p_g: Vec<VarId>,
    pub q_g: Vec<VarId>,
    pub p_d: Vec<VarId>,
    pub q_d: Vec<VarId>,
    pub p: Vec<VarId>,
    pub q: Vec<VarId>,
    pub u: Vec<VarId>,
    pub z: Option<VarId>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaaConfig {
    pub gamma: f64,
    /// Fraction of demand a retained scenario must serve.
    pub rho: f64,
    /// Objective weight per partition-graph vertex; all ones when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

impl Default for SaaConfig {
    fn default() -> Self {
        Self {
            gamma: 0.0,
            rho: 1.0,
            weights: None,
        }
    }
}

impl SaaConfig {
    pub fn new(gamma: f64) -> Self {
        Self {
            gamma,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), FormulationError> {
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(FormulationError::BadGamma(self.gamma));
        }
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(FormulationError::BadRho(self.rho));
        }
        if let Some(w) = &self.weights {
            if w.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                return Err(FormulationError::BadWeights("weights must be finite and non-negative".into()));
            }
        }
        Ok(())
    }

    /// Minimum number of retained scenarios, `ceil((1 - gamma) N)`.
    pub fn required_retained(&self, n: usize) -> usize {
        ((1.0 - self.gamma) * n as f64 - 1e-9).ceil().max(0.0) as usize
    }
}

/// A built model together with the handles needed to read it back.
#[derive(Clone, Debug)]
pub struct OdnpModel {
    pub model: MilpModel,
    pub graph: PartitionGraph,
    pub design: DesignVars,
    pub scenario_vars: Vec<ScenarioVars>,
    pub scenarios: ScenarioSet,
    pub config: SaaConfig,
    /// True for the single-scenario model with equality loads.
    pub deterministic: bool,
}

fn weights(cfg: &SaaConfig, g: &PartitionGraph) -> Result<Vec<f64>, FormulationError> {
    match &cfg.weights {
        None => Ok(vec![1.0; g.num_vertices()]),
        Some(w) if w.len() == g.num_vertices() => Ok(w.clone()),
        Some(w) => Err(FormulationError::BadWeights(format!(
            "{} weights for {} buses",
            w.len(),
            g.num_vertices()
        ))),
    }
}

fn design_blocks(m: &mut MilpModel, g: &PartitionGraph) -> Result<DesignVars, FormulationError> {
    if g.num_vertices() == 0 {
        return Err(FormulationError::EmptyGraph);
    }
    if g.grid_formers.is_empty() {
        return Err(FormulationError::NoGridFormer);
    }
    let d = DesignVars::add(m, g)?;
    radiality_block(m, g, &d)?;
    grid_forming_block(m, g, &g.grid_formers, &d)?;
    topology_block(m, g, &d)?;
    strengthening_block(m, g, &d)?;
    Ok(d)
}

fn aligned(net: &FeederNetwork, g: &PartitionGraph, s: &ScenarioSet) -> Result<ScenarioSet, FormulationError> {
    Ok(s.for_graph(net, g)?)
}

/// Single-scenario model: every energized bus consumes exactly its demand;
/// minimizes minus the (weighted) served active load.
pub fn build_deterministic(net: &FeederNetwork, scenario: &ScenarioSet, weights_cfg: Option<Vec<f64>>) -> Result<OdnpModel, FormulationError> {
    if scenario.len() != 1 {
        return Err(if scenario.is_empty() {
            FormulationError::NoScenarios
        } else {
            FormulationError::Dimension {
                expected: 1,
                got: scenario.len(),
            }
        });
    }
    let g = PartitionGraph::new(net);
    let s = aligned(net, &g, scenario)?;
    let cfg = SaaConfig {
        weights: weights_cfg,
        ..SaaConfig::default()
    };
    cfg.validate()?;
    let w = weights(&cfg, &g)?;
    let mut m = MilpModel::new(format!("{}-deterministic", net.name));
    let d = design_blocks(&mut m, &g)?;
    let xi = &s.scenarios[0];
    let sv = power_flow_block(&mut m, &g, net, xi, &d, "0")?;
    load_equality_block(&mut m, &g, xi, &d, &sv, "0")?;
    m.set_objective(sv.p_d.iter().zip(&w).map(|(&p, &w)| (p, -w)).collect())?;
    Ok(OdnpModel {
        model: m,
        graph: g,
        design: d,
        scenario_vars: vec![sv],
        scenarios: s,
        config: cfg,
        deterministic: true,
    })
}

/// Sampled chance-constrained model over `scenarios`; minimizes minus the
/// average (weighted) served active load.
pub fn build_saa(net: &FeederNetwork, scenarios: &ScenarioSet, cfg: &SaaConfig) -> Result<OdnpModel, FormulationError> {
    cfg.validate()?;
    if scenarios.is_empty() {
        return Err(FormulationError::NoScenarios);
    }
    let g = PartitionGraph::new(net);
    let s = aligned(net, &g, scenarios)?;
    let w = weights(cfg, &g)?;
    let n = s.len();
    let mut m = MilpModel::new(format!("{}-saa-n{n}", net.name));
    m.notes.push(format!("gamma={} rho={} retained>={}", cfg.gamma, cfg.rho, cfg.required_retained(n)));
    let d = design_blocks(&mut m, &g)?;
    let mut svs = Vec::with_capacity(n);
    for (a, xi) in s.scenarios.iter().enumerate() {
        svs.push(power_flow_block(&mut m, &g, net, xi, &d, &a.to_string())?);
    }
    chance_block(&mut m, &g, &s.scenarios, cfg, &d, &mut svs)?;
    let scale = 1.0 / n as f64;
    let mut obj = Vec::with_capacity(n * g.num_vertices());
    for sv in &svs {
        obj.extend(sv.p_d.iter().zip(&w).map(|(&p, &w)| (p, -w * scale)));
    }
    m.set_objective(obj)?;
    Ok(OdnpModel {
        model: m,
        graph: g,
        design: d,
        scenario_vars: svs,
        scenarios: s,
        config: cfg.clone(),
        deterministic: false,
    })
}

impl OdnpModel {
    pub fn num_scenarios(&self) -> usize {
        self.scenario_vars.len()
    }

    /// Branching priorities: scenario retention first, then bus energization,
    /// then line energization, then the forest selection.
    pub fn priorities(&self) -> Vec<i32> {
        let mut p = vec![0; self.model.num_vars()];
        for &v in &self.design.theta {
            p[v.0] = 1;
        }
        for &v in &self.design.b_e {
            p[v.0] = 2;
        }
        for &v in &self.design.b_n {
            p[v.0] = 3;
        }
        for z in self.scenario_vars.iter().filter_map(|s| s.z) {
            p[z.0] = 4;
        }
        p
    }

    /// The all-de-energized point: no bus or line energized, every scenario
    /// retained, a breadth-first spanning forest carrying the tree flow.
    pub fn trivial_assignment(&self) -> Assignment {
        let g = &self.graph;
        let mut a = Assignment::zeros(&self.model);
        let forest = g.bfs_spanning_forest();
        let adj = g.adjacency();
        let (refs, _) = blocks::references(g);
        // subtree sizes along the forest, rooted at each component reference
        let mut parent_edge = vec![usize::MAX; g.num_vertices()];
        let mut order = Vec::with_capacity(g.num_vertices());
        let mut seen = vec![false; g.num_vertices()];
        for r in (0..g.num_vertices()).filter(|&v| refs[v] == v) {
            seen[r] = true;
            let mut q = VecDeque::from([r]);
            while let Some(u) = q.pop_front() {
                order.push(u);
                for &(w, e) in &adj[u] {
                    if forest[e] && !seen[w] {
                        seen[w] = true;
                        parent_edge[w] = e;
                        q.push_back(w);
                    }
                }
            }
        }
        let mut size = vec![1.0; g.num_vertices()];
        for &u in order.iter().rev() {
            let e = parent_edge[u];
            if e == usize::MAX {
                continue;
            }
            let (i, j) = g.edges[e];
            let parent = if i == u { j } else { i };
            size[parent] += size[u];
            // the commodity moves from parent to child
            a.set(self.design.f[e], if j == u { size[u] } else { -size[u] });
            a.set(self.design.theta[e], 1.0);
        }
        for z in self.scenario_vars.iter().filter_map(|s| s.z) {
            a.set(z, 1.0);
        }
        a
    }

    /// Solves with the built-in branch and bound. Unless `opt` already
    /// provides an incumbent, the search starts from the greedy design, or
    /// from the trivial point when the greedy one is not confirmed.
    pub fn solve(&self, opt: &SolveOptions) -> Result<MilpResult, SolverError> {
        let mut o = opt.clone();
        if o.priorities.is_none() {
            o.priorities = Some(self.priorities());
        }
        // keep whichever start is better: the caller's or the greedy one
        let value = |a: &Assignment| self.model.objective_value(&a.0);
        let greedy = self.greedy_assignment().unwrap_or_else(|| self.trivial_assignment());
        o.initial_incumbent = match o.initial_incumbent.take() {
            Some(a) if value(&a) <= value(&greedy) => Some(a),
            _ => Some(greedy),
        };
        solve_milp(&self.model, &o)
    }

    pub fn solve_with_backend(&self, backend: &BackendCommand) -> Result<MilpResult, SolverError> {
        solve_via_backend(&self.model, backend)
    }

    /// Maps a point of another model onto this one by variable name;
    /// unmatched variables are zero. Returns it only if it is feasible here.
    pub fn transfer(&self, from: &MilpModel, a: &Assignment) -> Option<Assignment> {
        let names: HashMap<&str, usize> = from
            .variables()
            .iter()
            .enumerate()
            .map(|(j, v)| (v.name.as_str(), j))
            .collect();
        let mut out = Assignment::zeros(&self.model);
        for (j, v) in self.model.variables().iter().enumerate() {
            if let Some(&k) = names.get(v.name.as_str()) {
                out.0[j] = a.0[k];
            }
        }
        match evaluate(&self.model, &out) {
            Ok(e) if e.feasible => Some(out),
            _ => None,
        }
    }

    pub fn scenario(&self, a: usize) -> &Scenario {
        &self.scenarios.scenarios[a]
    }
}
