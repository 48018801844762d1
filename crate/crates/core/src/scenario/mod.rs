//! Load/generation scenarios: synthesis of annual hourly profiles, uniform
//! and cluster-stratified sampling, and CSV/JSON exchange.

mod cluster;
mod io;
mod sampling;
mod synth;

pub use cluster::{fit_clusters, ClusterModel, Linkage};
pub use io::{read_csv, read_json, write_csv, write_json};
pub use sampling::{sample_stratified, sample_uniform, stratified_indices, uniform_indices};
pub use synth::{percentile, synthesize, GenFamily, LoadFamily, SynthConfig};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::{FeederNetwork, PartitionGraph};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("unknown profile family `{0}`")]
    UnknownFamily(String),
    #[error("hours must be positive")]
    NoHours,
    #[error("noise level must be finite and non-negative")]
    BadNoise,
    #[error("cannot draw {0} samples from an empty scenario set")]
    EmptySource(usize),
    #[error("sample size {n} is not a multiple of the cluster count {k}")]
    NotMultiple { n: usize, k: usize },
    #[error("cluster {0} is empty")]
    EmptyCluster(usize),
    #[error("cannot form {k} clusters from {n} scenarios")]
    TooFewScenarios { k: usize, n: usize },
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("bus mismatch: {0}")]
    Mismatch(String),
    #[error("format: {0}")]
    Format(String),
}

/// One realization of generation capacity and demand, indexed like the
/// owning set's `bus_ids`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub gp: Vec<f64>,
    pub gq: Vec<f64>,
    pub dp: Vec<f64>,
    pub dq: Vec<f64>,
}

impl Scenario {
    pub fn zeros(n: usize) -> Self {
        Self {
            gp: vec![0.0; n],
            gq: vec![0.0; n],
            dp: vec![0.0; n],
            dq: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.dp.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dp.is_empty()
    }

    pub fn total_demand(&self) -> f64 {
        self.dp.iter().sum()
    }

    fn permuted(&self, order: &[usize]) -> Self {
        let pick = |v: &[f64]| order.iter().map(|&i| v[i]).collect();
        Self {
            gp: pick(&self.gp),
            gq: pick(&self.gq),
            dp: pick(&self.dp),
            dq: pick(&self.dq),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSet {
    pub bus_ids: Vec<String>,
    pub scenarios: Vec<Scenario>,
    pub seed: u64,
    pub provenance: String,
}

impl ScenarioSet {
    pub fn new(bus_ids: Vec<String>, scenarios: Vec<Scenario>, seed: u64, provenance: impl Into<String>) -> Result<Self, ScenarioError> {
        let n = bus_ids.len();
        for (a, s) in scenarios.iter().enumerate() {
            for (name, v) in [("gp", &s.gp), ("gq", &s.gq), ("dp", &s.dp), ("dq", &s.dq)] {
                if v.len() != n {
                    return Err(ScenarioError::Mismatch(format!(
                        "scenario {a} has {} {name} entries for {n} buses",
                        v.len()
                    )));
                }
                if let Some(x) = v.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
                    return Err(ScenarioError::Invalid(format!("scenario {a} has {name} value {x}")));
                }
            }
        }
        Ok(Self {
            bus_ids,
            scenarios,
            seed,
            provenance: provenance.into(),
        })
    }

    /// The single scenario made of nominal bus values, over the partition
    /// graph's vertices.
    pub fn nominal(net: &FeederNetwork, g: &PartitionGraph) -> Self {
        let mut s = Scenario::zeros(g.num_vertices());
        for (v, &b) in g.vertex_bus.iter().enumerate() {
            let bus = &net.buses[b];
            s.gp[v] = bus.gp;
            s.gq[v] = bus.gq;
            s.dp[v] = bus.dp;
            s.dq[v] = bus.dq;
        }
        Self {
            bus_ids: g.vertices.clone(),
            scenarios: vec![s],
            seed: 0,
            provenance: "nominal".into(),
        }
    }

    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    pub fn subset(&self, idx: &[usize], seed: u64, provenance: impl Into<String>) -> Self {
        Self {
            bus_ids: self.bus_ids.clone(),
            scenarios: idx.iter().map(|&i| self.scenarios[i].clone()).collect(),
            seed,
            provenance: provenance.into(),
        }
    }

    /// Reorders bus vectors to the graph's vertex order. The substation may
    /// appear in the input and is dropped; any other extra or missing bus is
    /// an error.
    pub fn for_graph(&self, net: &FeederNetwork, g: &PartitionGraph) -> Result<Self, ScenarioError> {
        if self.bus_ids == g.vertices {
            return Ok(self.clone());
        }
        let pos: std::collections::HashMap<&str, usize> =
            self.bus_ids.iter().enumerate().map(|(i, b)| (b.as_str(), i)).collect();
        if pos.len() != self.bus_ids.len() {
            return Err(ScenarioError::Mismatch("duplicate bus id in scenario set".into()));
        }
        let mut order = Vec::with_capacity(g.num_vertices());
        for v in &g.vertices {
            order.push(
                *pos.get(v.as_str())
                    .ok_or_else(|| ScenarioError::Mismatch(format!("bus `{v}` missing from scenarios")))?,
            );
        }
        if let Some(extra) = self
            .bus_ids
            .iter()
            .find(|b| **b != net.substation && g.vertex(b).is_none())
        {
            return Err(ScenarioError::Mismatch(format!("scenario bus `{extra}` is not in the network")));
        }
        Ok(Self {
            bus_ids: g.vertices.clone(),
            scenarios: self.scenarios.iter().map(|s| s.permuted(&order)).collect(),
            seed: self.seed,
            provenance: self.provenance.clone(),
        })
    }
}

/// Mixes a base seed with a path of indices (splitmix64 finalizer per step),
/// giving independent reproducible seeds for repeated runs.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    let mut h = base;
    for &p in path {
        h = splitmix(h ^ splitmix(p.wrapping_add(0x9e37_79b9_7f4a_7c15)));
    }
    h
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
