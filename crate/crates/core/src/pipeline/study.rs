//! Parameter sweeps written as tidy CSV rows.

use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{assess, partition, Budget, ModelKind, PartitionRun, PipelineError, Sampler};
use crate::formulation::SaaConfig;
use crate::milp::{Assignment, MilpModel};
use crate::network::FeederNetwork;
use crate::scenario::{derive_seed, ScenarioSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyKind {
    /// Risk level per grid point over one fixed scenario set per repeat.
    GammaSweep,
    /// Number of tie lines available per grid point.
    SwitchSweep,
    /// Sample size per grid point.
    ScenarioCountSweep,
    /// Grid points 1 and 2: uniform sampling at the given risk level against
    /// stratified sampling with no scenario dropped.
    MethodCompare,
}

impl FromStr for StudyKind {
    type Err = PipelineError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.replace('-', "_").as_str() {
            "gamma_sweep" => Ok(Self::GammaSweep),
            "switch_sweep" => Ok(Self::SwitchSweep),
            "scenario_count_sweep" => Ok(Self::ScenarioCountSweep),
            "method_compare" => Ok(Self::MethodCompare),
            _ => Err(PipelineError::Input(format!("unknown study kind `{s}`"))),
        }
    }
}

impl StudyKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::GammaSweep => "gamma_sweep",
            Self::SwitchSweep => "switch_sweep",
            Self::ScenarioCountSweep => "scenario_count_sweep",
            Self::MethodCompare => "method_compare",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudySpec {
    pub kind: StudyKind,
    pub grid: Vec<f64>,
    pub repeats: usize,
    pub seed: u64,
    /// Scenarios per solve (unused by the count sweep, whose grid sets it).
    pub n: usize,
    pub gamma: f64,
    pub rho: f64,
    pub clusters: usize,
    /// Fresh draws per out-of-sample assessment; 0 skips assessment.
    pub n_prime: usize,
    pub beta: f64,
    /// Adds a wall-clock column, which makes the output differ run to run.
    pub record_time: bool,
}

impl StudySpec {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.grid.is_empty() {
            return Err(PipelineError::Input("study grid is empty".into()));
        }
        if self.repeats == 0 {
            return Err(PipelineError::Input("study needs at least one repeat".into()));
        }
        let integral = |x: f64| x >= 0.0 && x.fract() == 0.0;
        match self.kind {
            StudyKind::SwitchSweep | StudyKind::ScenarioCountSweep if !self.grid.iter().all(|&x| integral(x)) => {
                Err(PipelineError::Input("this study needs non-negative integer grid values".into()))
            }
            StudyKind::ScenarioCountSweep if self.grid.contains(&0.0) => Err(PipelineError::Input("sample sizes must be positive".into())),
            StudyKind::MethodCompare if !self.grid.iter().all(|&x| x == 1.0 || x == 2.0) => {
                Err(PipelineError::Input("method_compare grid holds methods 1 and 2".into()))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub kind: String,
    pub param: f64,
    pub repeat: usize,
    pub seed: u64,
    pub status: String,
    pub objective: Option<f64>,
    pub bound: Option<f64>,
    pub q_hat: Option<f64>,
    #[serde(rename = "U")]
    pub u: Option<f64>,
    /// The design's objective re-estimated on the assessment draws, which
    /// are shared by every row of a repeat. Comparable across sampling
    /// methods, unlike `objective`.
    pub oos_objective: Option<f64>,
    pub nodes: Option<usize>,
    pub lp_iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time: Option<f64>,
}

struct Ctx<'a> {
    net: &'a FeederNetwork,
    sampler: &'a Sampler,
    spec: &'a StudySpec,
    budget: &'a Budget,
}

impl Ctx<'_> {
    fn row(&self, param: f64, repeat: usize, seed: u64, run: Result<PartitionRun, PipelineError>, assess_seed: u64, took: f64) -> StudyRow {
        let mut row = StudyRow {
            kind: self.spec.kind.name().into(),
            param,
            repeat,
            seed,
            status: String::new(),
            objective: None,
            bound: None,
            q_hat: None,
            u: None,
            oos_objective: None,
            nodes: None,
            lp_iterations: None,
            wall_time: self.spec.record_time.then_some(took),
        };
        match run {
            Ok(r) => {
                row.status = format!("{:?}", r.result.status).to_lowercase();
                row.objective = Some(r.result.objective);
                row.bound = Some(r.result.bound);
                row.nodes = Some(r.result.nodes_explored);
                row.lp_iterations = Some(r.result.lp_iterations);
                if self.spec.n_prime > 0 {
                    match assess(&r.solution, self.net, &self.sampler.pool, self.spec.n_prime, self.spec.beta, None, assess_seed) {
                        Ok(v) => {
                            row.q_hat = Some(v.q_hat);
                            row.u = Some(v.u);
                            row.oos_objective = v.objective;
                        }
                        Err(e) => row.status = format!("assess_error: {e}"),
                    }
                }
            }
            Err(e) => row.status = format!("error: {e}"),
        }
        row
    }

    fn saa(&self, gamma: f64) -> ModelKind {
        ModelKind::Saa(SaaConfig {
            gamma,
            rho: self.spec.rho,
            weights: None,
        })
    }

    /// One repeat of a sweep whose feasible sets grow along the grid: solved
    /// in ascending order, each warm-started from the previous design.
    fn chained(&self, repeat: usize) -> Vec<StudyRow> {
        let spec = self.spec;
        let sample_seed = derive_seed(spec.seed, &[repeat as u64]);
        let assess_seed = derive_seed(spec.seed, &[repeat as u64, u64::MAX]);
        let sample = match self.sampler.draw(spec.n, false, sample_seed) {
            Ok(s) => s,
            Err(e) => {
                let msg = e.to_string();
                return spec.grid.iter().map(|&p| self.row(p, repeat, sample_seed, Err(PipelineError::Input(msg.clone())), 0, 0.0)).collect();
            }
        };
        let mut order: Vec<usize> = (0..spec.grid.len()).collect();
        order.sort_by(|&a, &b| spec.grid[a].total_cmp(&spec.grid[b]).then(a.cmp(&b)));
        let mut rows: Vec<Option<StudyRow>> = vec![None; spec.grid.len()];
        let mut prev: Option<(MilpModel, Assignment)> = None;
        for g in order {
            let p = spec.grid[g];
            let t = Instant::now();
            let run = self.one_chained(p, &sample, prev.as_ref().map(|(m, a)| (m, a)));
            if let Ok(r) = &run {
                prev = Some((r.model.model.clone(), r.incumbent.clone()));
            }
            rows[g] = Some(self.row(p, repeat, sample_seed, run, assess_seed, t.elapsed().as_secs_f64()));
        }
        rows.into_iter().map(|r| r.expect("every grid point visited")).collect()
    }

    fn one_chained(&self, p: f64, sample: &ScenarioSet, warm: Option<(&MilpModel, &Assignment)>) -> Result<PartitionRun, PipelineError> {
        match self.spec.kind {
            StudyKind::GammaSweep => partition(self.net, sample, &self.saa(p), self.budget, warm),
            StudyKind::SwitchSweep => {
                let net = self.net.with_tie_lines(p as usize)?;
                partition(&net, sample, &self.saa(self.spec.gamma), self.budget, warm)
            }
            _ => unreachable!("only sweeps with nested feasible sets are chained"),
        }
    }

    fn independent(&self, g: usize, repeat: usize) -> StudyRow {
        let spec = self.spec;
        let p = spec.grid[g];
        let assess_seed = derive_seed(spec.seed, &[repeat as u64, u64::MAX]);
        let t = Instant::now();
        let (seed, run) = match spec.kind {
            StudyKind::ScenarioCountSweep => {
                let seed = derive_seed(spec.seed, &[g as u64, repeat as u64]);
                let run = self
                    .sampler
                    .draw(p as usize, false, seed)
                    .and_then(|s| partition(self.net, &s, &self.saa(spec.gamma), self.budget, None));
                (seed, run)
            }
            StudyKind::MethodCompare => {
                // both methods see the same repeat seed and the same fresh draws
                let seed = derive_seed(spec.seed, &[repeat as u64]);
                let stratified = p == 2.0;
                let gamma = if stratified { 0.0 } else { spec.gamma };
                let run = self
                    .sampler
                    .draw(spec.n, stratified, seed)
                    .and_then(|s| partition(self.net, &s, &self.saa(gamma), self.budget, None));
                (seed, run)
            }
            _ => unreachable!("sweeps are chained"),
        };
        self.row(p, repeat, seed, run, assess_seed, t.elapsed().as_secs_f64())
    }
}

/// Runs the study. Rows come back ordered by grid point, then repeat,
/// whatever order the worker pool finishes them in.
pub fn run_study(net: &FeederNetwork, sampler: &Sampler, spec: &StudySpec, budget: &Budget) -> Result<Vec<StudyRow>, PipelineError> {
    spec.validate()?;
    let ctx = Ctx { net, sampler, spec, budget };
    let mut cells: Vec<(usize, usize, StudyRow)> = match spec.kind {
        StudyKind::GammaSweep | StudyKind::SwitchSweep => (0..spec.repeats)
            .into_par_iter()
            .flat_map_iter(|r| ctx.chained(r).into_iter().enumerate().map(move |(g, row)| (g, r, row)))
            .collect(),
        StudyKind::ScenarioCountSweep | StudyKind::MethodCompare => (0..spec.grid.len())
            .flat_map(|g| (0..spec.repeats).map(move |r| (g, r)))
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|(g, r)| (g, r, ctx.independent(g, r)))
            .collect(),
    };
    cells.sort_by_key(|&(g, r, _)| (g, r));
    Ok(cells.into_iter().map(|(_, _, row)| row).collect())
}

pub fn to_csv(rows: &[StudyRow]) -> Result<String, PipelineError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| PipelineError::Input(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| PipelineError::Input(e.to_string()))
}

/// Grid points, in ascending parameter order within each repeat, where the
/// objective rose. Sweeps with nested feasible sets should report none.
pub fn monotonicity_violations(rows: &[StudyRow]) -> Vec<(usize, f64)> {
    let mut by_repeat: std::collections::BTreeMap<usize, Vec<&StudyRow>> = Default::default();
    for r in rows {
        by_repeat.entry(r.repeat).or_default().push(r);
    }
    let mut out = Vec::new();
    for (rep, mut v) in by_repeat {
        v.sort_by(|a, b| a.param.total_cmp(&b.param));
        for w in v.windows(2) {
            if let (Some(a), Some(b)) = (w[0].objective, w[1].objective) {
                if b > a {
                    out.push((rep, w[1].param));
                }
            }
        }
    }
    out
}
