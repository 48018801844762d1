//! Command-level workflows: load inputs, draw scenarios, solve, verify,
//! assess. Shared by the `mgpart` binary and the C interface.

pub mod study;

use std::path::Path;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::formulation::{build_deterministic, build_saa, extract_solution, FormulationError, OdnpModel, PartitionSolution, SaaConfig, SolutionError};
use crate::milp::{Assignment, MilpModel};
use crate::network::{fixtures, load_network, FeederNetwork, NetworkError, PartitionGraph};
use crate::scenario::{
    derive_seed, fit_clusters, read_csv, read_json, sample_stratified, sample_uniform, synthesize, write_csv, write_json, ClusterModel,
    Linkage, ScenarioError, ScenarioSet, SynthConfig,
};
use crate::solver::{BranchingRule, MilpResult, MilpStatus, SolveOptions, SolverError};
use crate::validator::{estimate_violation, verify, BinomConvention, DesignChecker, LowerBoundReport, ValidationReport, ValidatorError, VerifyReport};

/// Principal components kept before clustering scenarios.
pub const PCA_DIMS: usize = 2;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Input(String),
    #[error("solution failed re-verification: {0}")]
    Verification(String),
    #[error("solver ended {0:?} without a feasible point")]
    NoSolution(MilpStatus),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Formulation(#[from] FormulationError),
    #[error(transparent)]
    Solution(#[from] SolutionError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Validator(#[from] ValidatorError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub fn read_text(path: &Path) -> Result<String, PipelineError> {
    std::fs::read_to_string(path).map_err(|source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<(), PipelineError> {
    std::fs::write(path, text).map_err(|source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// A network file path, or `builtin:<name>` for a bundled fixture.
pub fn load_network_arg(arg: &str) -> Result<FeederNetwork, PipelineError> {
    if let Some(name) = arg.strip_prefix("builtin:") {
        return fixtures::by_name(name)
            .ok_or_else(|| PipelineError::Input(format!("no bundled network `{name}` (have {})", fixtures::NAMES.join(", "))));
    }
    Ok(load_network(&read_text(Path::new(arg))?)?)
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

/// Scenario file, JSON when the extension says so and CSV otherwise.
pub fn read_scenarios(path: &Path) -> Result<ScenarioSet, PipelineError> {
    let text = read_text(path)?;
    Ok(if is_json(path) { read_json(&text)? } else { read_csv(&text)? })
}

pub fn write_scenarios(path: &Path, s: &ScenarioSet) -> Result<(), PipelineError> {
    write_text(path, &if is_json(path) { write_json(s) } else { write_csv(s) })
}

/// Where realizations come from: a file, or the synthetic hourly profiles.
#[derive(Clone, Debug)]
pub enum ScenarioSource {
    File(ScenarioSet),
    Synth(SynthConfig),
}

impl ScenarioSource {
    /// The full pool over the network's partition-graph vertices.
    pub fn pool(&self, net: &FeederNetwork, seed: u64) -> Result<ScenarioSet, PipelineError> {
        let g = PartitionGraph::new(net);
        Ok(match self {
            Self::File(s) => s.for_graph(net, &g)?,
            Self::Synth(cfg) => synthesize(net, cfg, seed)?,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sampling {
    Uniform,
    /// Equal draws from each of `clusters` groups of similar realizations.
    Stratified { clusters: usize },
}

/// A scenario pool with its cluster model fitted once.
#[derive(Clone, Debug)]
pub struct Sampler {
    pub pool: ScenarioSet,
    clusters: Option<ClusterModel>,
}

impl Sampler {
    pub fn new(pool: ScenarioSet, sampling: Sampling) -> Result<Self, PipelineError> {
        let clusters = match sampling {
            Sampling::Uniform => None,
            Sampling::Stratified { clusters } => Some(fit_clusters(&pool, clusters, PCA_DIMS, Linkage::Ward)?),
        };
        Ok(Self { pool, clusters })
    }

    pub fn draw(&self, n: usize, stratified: bool, seed: u64) -> Result<ScenarioSet, PipelineError> {
        match (&self.clusters, stratified) {
            (Some(m), true) => Ok(sample_stratified(&self.pool, m, n, seed)?),
            (None, true) => Err(PipelineError::Input("stratified draw without a cluster model".into())),
            (_, false) => Ok(sample_uniform(&self.pool, n, seed)?),
        }
    }
}

/// Stopping rules for one solve.
#[derive(Clone, Debug, PartialEq)]
pub struct Budget {
    pub time_limit: Option<Duration>,
    pub gap: f64,
    pub node_limit: Option<usize>,
    pub branching: BranchingRule,
}

impl Default for Budget {
    fn default() -> Self {
        Self {
            time_limit: None,
            gap: 0.01,
            node_limit: None,
            branching: BranchingRule::MostFractional,
        }
    }
}

impl Budget {
    pub fn options(&self) -> SolveOptions {
        SolveOptions {
            time_limit: self.time_limit,
            gap_tolerance: self.gap,
            node_limit: self.node_limit,
            branching: self.branching,
            ..SolveOptions::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ModelKind {
    /// One scenario, every energized load served in full.
    Deterministic,
    Saa(SaaConfig),
}

pub fn build(net: &FeederNetwork, scenarios: &ScenarioSet, kind: &ModelKind) -> Result<OdnpModel, PipelineError> {
    Ok(match kind {
        ModelKind::Deterministic => build_deterministic(net, scenarios, None)?,
        ModelKind::Saa(cfg) => build_saa(net, scenarios, cfg)?,
    })
}

#[derive(Clone, Debug)]
pub struct PartitionRun {
    pub model: OdnpModel,
    pub result: MilpResult,
    pub incumbent: Assignment,
    pub solution: PartitionSolution,
    pub check: VerifyReport,
}

/// Builds, solves and re-verifies. `warm` is a point of a related model
/// (same names), used as the starting incumbent when it is feasible here.
pub fn partition(
    net: &FeederNetwork,
    scenarios: &ScenarioSet,
    kind: &ModelKind,
    budget: &Budget,
    warm: Option<(&MilpModel, &Assignment)>,
) -> Result<PartitionRun, PipelineError> {
    let model = build(net, scenarios, kind)?;
    let mut opt = budget.options();
    opt.initial_incumbent = warm.and_then(|(m, a)| model.transfer(m, a));
    let result = model.solve(&opt)?;
    let incumbent = result.incumbent.clone().ok_or(PipelineError::NoSolution(result.status))?;
    let solution = extract_solution(net, &model, &incumbent)?;
    let check = verify(&solution, net, &model.scenarios)?;
    if !check.ok() {
        return Err(PipelineError::Verification(format!("{check:?}")));
    }
    Ok(PartitionRun {
        model,
        result,
        incumbent,
        solution,
        check,
    })
}

/// Process exit code for a finished solve: 0 optimal or stopped by the node
/// budget, 2 infeasible, 3 stopped by the clock.
pub fn exit_code(status: MilpStatus) -> i32 {
    match status {
        MilpStatus::Optimal | MilpStatus::Feasible => 0,
        MilpStatus::Infeasible => 2,
        MilpStatus::TimeLimit => 3,
    }
}

/// Out-of-sample check of a solution on `n_prime` fresh uniform draws.
pub fn assess(
    sol: &PartitionSolution,
    net: &FeederNetwork,
    pool: &ScenarioSet,
    n_prime: usize,
    beta: f64,
    epsilon: Option<f64>,
    seed: u64,
) -> Result<ValidationReport, PipelineError> {
    let checker = DesignChecker::new(sol, net)?;
    let draws = checker.align(&sample_uniform(pool, n_prime, seed)?)?;
    let count = estimate_violation(&checker, &draws);
    let mut report = ValidationReport::new(count.infeasible, count.numerical_failures, count.total, beta, epsilon, seed)?;
    report.objective = Some(count.objective());
    Ok(report)
}

/// Stand-in for the adequacy check: each draw fails with probability `q`.
pub fn assess_bernoulli(q: f64, n_prime: usize, beta: f64, epsilon: Option<f64>, seed: u64) -> Result<ValidationReport, PipelineError> {
    if !(0.0..=1.0).contains(&q) {
        return Err(PipelineError::Input(format!("Bernoulli probability {q} outside [0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fails = (0..n_prime).filter(|_| rng.random_bool(q)).count() as u64;
    Ok(ValidationReport::new(fails, 0, n_prime as u64, beta, epsilon, seed)?)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LowerBoundSpec {
    pub m: usize,
    pub n_dprime: usize,
    pub gamma: f64,
    pub epsilon: f64,
    pub beta: f64,
    pub rho: f64,
    pub convention: BinomConvention,
}

/// `M` independent sampled problems; each contributes its proven lower
/// bound (the optimum when solved to optimality).
pub fn lower_bound_run(
    net: &FeederNetwork,
    sampler: &Sampler,
    spec: &LowerBoundSpec,
    budget: &Budget,
    seed: u64,
) -> Result<(LowerBoundReport, Vec<MilpResult>), PipelineError> {
    if spec.m == 0 || spec.n_dprime == 0 {
        return Err(PipelineError::Input("lower bound needs M >= 1 and N'' >= 1".into()));
    }
    let cfg = SaaConfig {
        gamma: spec.gamma,
        rho: spec.rho,
        weights: None,
    };
    let runs: Vec<Result<MilpResult, PipelineError>> = (0..spec.m)
        .into_par_iter()
        .map(|r| {
            let s = sampler.draw(spec.n_dprime, false, derive_seed(seed, &[r as u64]))?;
            let model = build_saa(net, &s, &cfg)?;
            let res = model.solve(&budget.options())?;
            log::info!("lower-bound run {r}: {:?} objective {} bound {}", res.status, res.objective, res.bound);
            Ok(res)
        })
        .collect();
    let mut results = Vec::with_capacity(spec.m);
    for (r, run) in runs.into_iter().enumerate() {
        match run {
            Ok(res) => results.push(res),
            Err(e) => {
                log::error!("lower-bound run {r} failed after {} finished runs", results.len());
                return Err(e);
            }
        }
    }
    let values: Vec<f64> = results.iter().map(|r| r.bound.min(r.objective)).collect();
    let report = LowerBoundReport::new(&values, spec.beta, spec.gamma, spec.epsilon, spec.n_dprime as u64, spec.convention)?;
    Ok((report, results))
}
