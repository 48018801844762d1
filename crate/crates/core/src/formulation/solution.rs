use std::collections::HashSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::OdnpModel;
use crate::milp::Assignment;
use crate::network::{FeederNetwork, PartitionGraph};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolutionError {
    #[error("binary `{name}` has non-integral value {value}")]
    NonIntegral { name: String, value: f64 },
    #[error("assignment has {got} values, model has {expected}")]
    Size { expected: usize, got: usize },
    #[error("solution refers to unknown {what} `{id}`")]
    Unknown { what: &'static str, id: String },
    #[error("malformed solution: {0}")]
    Format(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Microgrid {
    pub id: String,
    pub buses: Vec<String>,
    /// Energized lines as `[from, to]`.
    pub lines: Vec<[String; 2]>,
    pub grid_formers: Vec<String>,
}

/// Served load and per-island balance of one scenario. Island vectors follow
/// the order of `PartitionSolution::microgrids`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioOutcome {
    pub retained: bool,
    pub served_p: f64,
    pub served_q: f64,
    pub island_generation_p: Vec<f64>,
    pub island_demand_p: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionSolution {
    pub network: String,
    pub objective: f64,
    pub gamma: f64,
    pub rho: f64,
    pub deterministic: bool,
    pub microgrids: Vec<Microgrid>,
    /// Lines joining an energized bus to a de-energized one (the substation
    /// is always de-energized); these must be opened.
    pub boundary_lines: Vec<[String; 2]>,
    pub z: Vec<u8>,
    pub per_scenario: Vec<ScenarioOutcome>,
}

fn rounded(m: &OdnpModel, a: &Assignment, v: crate::milp::VarId) -> Result<bool, SolutionError> {
    let x = a.get(v);
    let r = x.round();
    if (x - r).abs() > 1e-6 || !(r == 0.0 || r == 1.0) {
        return Err(SolutionError::NonIntegral {
            name: m.model.variable(v).name.clone(),
            value: x,
        });
    }
    Ok(r == 1.0)
}

/// Reads the islands, boundary and per-scenario dispatch out of a point of
/// the model.
pub fn extract_solution(net: &FeederNetwork, m: &OdnpModel, a: &Assignment) -> Result<PartitionSolution, SolutionError> {
    if a.0.len() != m.model.num_vars() {
        return Err(SolutionError::Size {
            expected: m.model.num_vars(),
            got: a.0.len(),
        });
    }
    let g = &m.graph;
    let bn = m.design.b_n.iter().map(|&v| rounded(m, a, v)).collect::<Result<Vec<_>, _>>()?;
    let be = m.design.b_e.iter().map(|&v| rounded(m, a, v)).collect::<Result<Vec<_>, _>>()?;
    for &t in &m.design.theta {
        rounded(m, a, t)?;
    }
    let z = m
        .scenario_vars
        .iter()
        .map(|s| s.z.map_or(Ok(true), |v| rounded(m, a, v)))
        .collect::<Result<Vec<_>, _>>()?;

    let islands = islands_of(g, &bn, &be);
    let microgrids = islands
        .iter()
        .enumerate()
        .map(|(k, (vs, es))| Microgrid {
            id: format!("MG{}", k + 1),
            buses: vs.iter().map(|&v| g.vertices[v].clone()).collect(),
            lines: es.iter().map(|&e| line_ids(net, g, e)).collect(),
            grid_formers: vs.iter().filter(|&&v| g.is_grid_former(v)).map(|&v| g.vertices[v].clone()).collect(),
        })
        .collect();

    let per_scenario = m
        .scenario_vars
        .iter()
        .zip(&z)
        .map(|(sv, &retained)| ScenarioOutcome {
            retained,
            served_p: sv.p_d.iter().map(|&v| a.get(v)).sum(),
            served_q: sv.q_d.iter().map(|&v| a.get(v)).sum(),
            island_generation_p: islands.iter().map(|(vs, _)| vs.iter().map(|&v| a.get(sv.p_g[v])).sum()).collect(),
            island_demand_p: islands.iter().map(|(vs, _)| vs.iter().map(|&v| a.get(sv.p_d[v])).sum()).collect(),
        })
        .collect();

    let objective = m.model.objective_value(&a.0);
    Ok(PartitionSolution {
        network: net.name.clone(),
        objective,
        gamma: m.config.gamma,
        rho: m.config.rho,
        deterministic: m.deterministic,
        microgrids,
        boundary_lines: boundary(net, g, &bn),
        z: z.iter().map(|&b| u8::from(b)).collect(),
        per_scenario,
    })
}

fn line_ids(net: &FeederNetwork, g: &PartitionGraph, e: usize) -> [String; 2] {
    let l = &net.lines[g.edge_line[e]];
    [l.from.clone(), l.to.clone()]
}

/// Connected components of the energized subgraph, each with its vertices
/// and edges in ascending order, ordered by smallest vertex.
fn islands_of(g: &PartitionGraph, bn: &[bool], be: &[bool]) -> Vec<(Vec<usize>, Vec<usize>)> {
    let adj = g.adjacency();
    let mut seen = vec![false; g.num_vertices()];
    let mut out = Vec::new();
    for s in 0..g.num_vertices() {
        if !bn[s] || seen[s] {
            continue;
        }
        seen[s] = true;
        let mut vs = vec![s];
        let mut es = Vec::new();
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            for &(w, e) in &adj[u] {
                if be[e] && !es.contains(&e) {
                    es.push(e);
                }
                if be[e] && bn[w] && !seen[w] {
                    seen[w] = true;
                    vs.push(w);
                    stack.push(w);
                }
            }
        }
        vs.sort_unstable();
        es.sort_unstable();
        out.push((vs, es));
    }
    out
}

fn boundary(net: &FeederNetwork, g: &PartitionGraph, bn: &[bool]) -> Vec<[String; 2]> {
    let on = |id: &str| g.vertex(id).is_some_and(|v| bn[v]);
    net.lines
        .iter()
        .filter(|l| on(&l.from) != on(&l.to))
        .map(|l| [l.from.clone(), l.to.clone()])
        .collect()
}

impl PartitionSolution {
    /// Energization masks over the graph's vertices and edges.
    pub fn masks(&self, g: &PartitionGraph) -> Result<(Vec<bool>, Vec<bool>), SolutionError> {
        let mut bn = vec![false; g.num_vertices()];
        let mut be = vec![false; g.num_edges()];
        for mg in &self.microgrids {
            for b in &mg.buses {
                let v = g.vertex(b).ok_or_else(|| SolutionError::Unknown {
                    what: "bus",
                    id: b.clone(),
                })?;
                bn[v] = true;
            }
            for [f, t] in &mg.lines {
                let e = match (g.vertex(f), g.vertex(t)) {
                    (Some(i), Some(j)) => g.edge_between(i, j),
                    _ => None,
                }
                .ok_or_else(|| SolutionError::Unknown {
                    what: "line",
                    id: format!("{f}-{t}"),
                })?;
                be[e] = true;
            }
        }
        Ok((bn, be))
    }

    pub fn served_load_mean(&self) -> f64 {
        if self.per_scenario.is_empty() {
            return 0.0;
        }
        self.per_scenario.iter().map(|s| s.served_p).sum::<f64>() / self.per_scenario.len() as f64
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("solution serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, SolutionError> {
        serde_json::from_str(text).map_err(|e| SolutionError::Format(e.to_string()))
    }

    /// Graphviz rendering: one color per microgrid, the substation boxed,
    /// boundary lines dashed red, open normally-open lines dotted.
    pub fn to_dot(&self, net: &FeederNetwork) -> String {
        const PALETTE: [&str; 8] = ["#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#1f78b4"];
        let mut color = std::collections::HashMap::new();
        let mut energized_lines = HashSet::new();
        for (k, mg) in self.microgrids.iter().enumerate() {
            for b in &mg.buses {
                color.insert(b.as_str(), PALETTE[k % PALETTE.len()]);
            }
            for [f, t] in &mg.lines {
                energized_lines.insert((f.as_str(), t.as_str()));
            }
        }
        let gf: HashSet<&str> = self.microgrids.iter().flat_map(|m| m.grid_formers.iter().map(String::as_str)).collect();
        let boundary: HashSet<(&str, &str)> = self.boundary_lines.iter().map(|[f, t]| (f.as_str(), t.as_str())).collect();
        let mut s = format!("graph \"{}\" {{\n  node [style=filled, fontname=\"Helvetica\"];\n", net.name);
        for b in &net.buses {
            let shape = if b.id == net.substation {
                "box"
            } else if b.grid_forming {
                "doublecircle"
            } else {
                "circle"
            };
            let fill = color.get(b.id.as_str()).copied().unwrap_or("#dddddd");
            let pen = if gf.contains(b.id.as_str()) { ", penwidth=2" } else { "" };
            let _ = writeln!(s, "  \"{}\" [shape={shape}, fillcolor=\"{fill}\"{pen}];", b.id);
        }
        for l in &net.lines {
            let key = (l.from.as_str(), l.to.as_str());
            let style = if energized_lines.contains(&key) {
                let c = color.get(l.from.as_str()).copied().unwrap_or("black");
                format!("color=\"{c}\", penwidth=2")
            } else if boundary.contains(&key) {
                "color=red, style=dashed".to_string()
            } else if l.normally_open {
                "color=gray, style=dotted".to_string()
            } else {
                "color=gray".to_string()
            };
            let _ = writeln!(s, "  \"{}\" -- \"{}\" [{style}];", l.from, l.to);
        }
        s.push_str("}\n");
        s
    }
}
