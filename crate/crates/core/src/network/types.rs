use std::collections::{HashMap, HashSet, VecDeque};

use serde::{Deserialize, Deserializer, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("duplicate bus `{0}`")]
    DuplicateBus(String),
    #[error("line {line} references unknown bus `{bus}`")]
    UnknownBus { line: usize, bus: String },
    #[error("line {line} connects bus `{bus}` to itself")]
    SelfLoop { line: usize, bus: String },
    #[error("duplicate edge `{from}`-`{to}`")]
    DuplicateEdge { from: String, to: String },
    #[error("missing substation `{0}`")]
    MissingSubstation(String),
    #[error("no grid-forming bus")]
    NoGridFormer,
    #[error("disconnected base graph: bus `{0}` is unreachable from the substation")]
    Disconnected(String),
    #[error("negative or non-finite {field} on `{id}`")]
    BadValue { field: &'static str, id: String },
    #[error("reference vertex {index} out of range for {count} vertices")]
    RefOutOfRange { index: usize, count: usize },
    #[error("size mismatch: {what} has {got} entries, expected {expected}")]
    SizeMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
}

fn id_string<'de, D: Deserializer<'de>>(d: D) -> Result<String, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Id {
        S(String),
        I(i64),
    }
    Ok(match Id::deserialize(d)? {
        Id::S(s) => s,
        Id::I(i) => i.to_string(),
    })
}

/// Per-unit bus data. `dp`/`dq` are nominal demand, `gp`/`gq` rated
/// generation capacity and `qmin` the largest reactive absorption.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    #[serde(deserialize_with = "id_string")]
    pub id: String,
    #[serde(default)]
    pub dp: f64,
    #[serde(default)]
    pub dq: f64,
    #[serde(default)]
    pub gp: f64,
    #[serde(default)]
    pub gq: f64,
    #[serde(default)]
    pub qmin: f64,
    #[serde(default)]
    pub grid_forming: bool,
}

impl Bus {
    pub fn new(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            dp: 0.0,
            dq: 0.0,
            gp: 0.0,
            gq: 0.0,
            qmin: 0.0,
            grid_forming: false,
        }
    }

    /// Ratio dq/dp of the nominal demand, 0 for buses without load.
    pub fn power_factor_ratio(&self) -> f64 {
        if self.dp > 0.0 {
            self.dq / self.dp
        } else {
            0.0
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Line {
    #[serde(deserialize_with = "id_string")]
    pub from: String,
    #[serde(deserialize_with = "id_string")]
    pub to: String,
    pub r: f64,
    pub x: f64,
    pub pmax: f64,
    pub qmax: f64,
    #[serde(default)]
    pub normally_open: bool,
}

impl Line {
    pub fn new(from: impl Into<String>, to: impl Into<String>, r: f64, x: f64, limit: f64) -> Self {
        Self {
            from: from.into(),
            to: to.into(),
            r,
            x,
            pmax: limit,
            qmax: limit,
            normally_open: false,
        }
    }
}

#[derive(Deserialize)]
struct NetworkDoc {
    #[serde(default)]
    name: String,
    #[serde(default = "one")]
    base_mva: f64,
    #[serde(deserialize_with = "id_string")]
    substation: String,
    buses: Vec<Bus>,
    lines: Vec<Line>,
}

fn one() -> f64 {
    1.0
}

/// A validated feeder. Immutable after construction.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FeederNetwork {
    pub name: String,
    pub base_mva: f64,
    pub substation: String,
    pub buses: Vec<Bus>,
    pub lines: Vec<Line>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl FeederNetwork {
    pub fn new(
        name: impl Into<String>,
        base_mva: f64,
        substation: impl Into<String>,
        buses: Vec<Bus>,
        lines: Vec<Line>,
    ) -> Result<Self, NetworkError> {
        let substation = substation.into();
        let mut index = HashMap::with_capacity(buses.len());
        for (i, b) in buses.iter().enumerate() {
            if index.insert(b.id.clone(), i).is_some() {
                return Err(NetworkError::DuplicateBus(b.id.clone()));
            }
            for (field, v) in [
                ("dp", b.dp),
                ("dq", b.dq),
                ("gp", b.gp),
                ("gq", b.gq),
                ("qmin", b.qmin),
            ] {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(NetworkError::BadValue {
                        field,
                        id: b.id.clone(),
                    });
                }
            }
        }
        if !(base_mva.is_finite() && base_mva > 0.0) {
            return Err(NetworkError::BadValue {
                field: "base_mva",
                id: "network".into(),
            });
        }
        if !index.contains_key(&substation) {
            return Err(NetworkError::MissingSubstation(substation));
        }
        let mut pairs = HashSet::new();
        let mut adj = vec![Vec::new(); buses.len()];
        for (k, l) in lines.iter().enumerate() {
            let f = *index.get(&l.from).ok_or_else(|| NetworkError::UnknownBus {
                line: k,
                bus: l.from.clone(),
            })?;
            let t = *index.get(&l.to).ok_or_else(|| NetworkError::UnknownBus {
                line: k,
                bus: l.to.clone(),
            })?;
            if f == t {
                return Err(NetworkError::SelfLoop {
                    line: k,
                    bus: l.from.clone(),
                });
            }
            if !pairs.insert((f.min(t), f.max(t))) {
                return Err(NetworkError::DuplicateEdge {
                    from: l.from.clone(),
                    to: l.to.clone(),
                });
            }
            for (field, v) in [("r", l.r), ("x", l.x), ("pmax", l.pmax), ("qmax", l.qmax)] {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(NetworkError::BadValue {
                        field,
                        id: format!("{}-{}", l.from, l.to),
                    });
                }
            }
            adj[f].push(t);
            adj[t].push(f);
        }
        if !buses.iter().any(|b| b.grid_forming) {
            return Err(NetworkError::NoGridFormer);
        }
        let root = index[&substation];
        let mut seen = vec![false; buses.len()];
        seen[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(NetworkError::Disconnected(buses[i].id.clone()));
        }
        Ok(Self {
            name: name.into(),
            base_mva,
            substation,
            buses,
            lines,
            index,
        })
    }

    pub fn bus_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn bus(&self, id: &str) -> Option<&Bus> {
        self.bus_index(id).map(|i| &self.buses[i])
    }

    /// Sum of nominal active demand.
    pub fn total_demand(&self) -> f64 {
        self.buses.iter().map(|b| b.dp).sum()
    }

    /// Copy keeping only the first `k` normally-open lines (in document order).
    pub fn with_tie_lines(&self, k: usize) -> Result<Self, NetworkError> {
        let mut kept = 0;
        let lines = self
            .lines
            .iter()
            .filter(|l| {
                if !l.normally_open {
                    return true;
                }
                kept += 1;
                kept <= k
            })
            .cloned()
            .collect();
        Self::new(
            self.name.clone(),
            self.base_mva,
            self.substation.clone(),
            self.buses.clone(),
            lines,
        )
    }

    pub fn num_tie_lines(&self) -> usize {
        self.lines.iter().filter(|l| l.normally_open).count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("network serializes")
    }
}

/// Parses and validates a network document.
pub fn load_network(text: &str) -> Result<FeederNetwork, NetworkError> {
    let doc: NetworkDoc =
        serde_json::from_str(text).map_err(|e| NetworkError::Schema(e.to_string()))?;
    FeederNetwork::new(doc.name, doc.base_mva, doc.substation, doc.buses, doc.lines)
}
