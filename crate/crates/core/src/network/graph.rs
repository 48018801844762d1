use std::collections::{HashMap, VecDeque};

use serde::Serialize;

use super::{FeederNetwork, NetworkError};
use crate::solver::sparse::CscMatrix;

/// Substation-free induced subgraph of a feeder. Edge `k` points from
/// `edges[k].0` to `edges[k].1`, in the order the lines were given.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionGraph {
    pub vertices: Vec<String>,
    pub edges: Vec<(usize, usize)>,
    /// Index into `FeederNetwork::buses` for each vertex.
    pub vertex_bus: Vec<usize>,
    /// Index into `FeederNetwork::lines` for each edge.
    pub edge_line: Vec<usize>,
    pub grid_formers: Vec<usize>,
    vertex_index: HashMap<String, usize>,
    edge_index: HashMap<(usize, usize), usize>,
}

impl PartitionGraph {
    pub fn new(net: &FeederNetwork) -> Self {
        let mut vertices = Vec::new();
        let mut vertex_bus = Vec::new();
        let mut vertex_index = HashMap::new();
        let mut grid_formers = Vec::new();
        for (i, b) in net.buses.iter().enumerate() {
            if b.id == net.substation {
                continue;
            }
            let v = vertices.len();
            if b.grid_forming {
                grid_formers.push(v);
            }
            vertex_index.insert(b.id.clone(), v);
            vertices.push(b.id.clone());
            vertex_bus.push(i);
        }
        let mut edges = Vec::new();
        let mut edge_line = Vec::new();
        let mut edge_index = HashMap::new();
        for (k, l) in net.lines.iter().enumerate() {
            if let (Some(&i), Some(&j)) = (vertex_index.get(&l.from), vertex_index.get(&l.to)) {
                edge_index.insert((i.min(j), i.max(j)), edges.len());
                edges.push((i, j));
                edge_line.push(k);
            }
        }
        Self {
            vertices,
            edges,
            vertex_bus,
            edge_line,
            grid_formers,
            vertex_index,
            edge_index,
        }
    }

    /// Builds a bare graph from vertex names and directed index pairs. Used by
    /// tests and tools that don't carry electrical data.
    pub fn from_edges(vertices: Vec<String>, edges: Vec<(usize, usize)>, mut grid_formers: Vec<usize>) -> Self {
        grid_formers.sort_unstable();
        grid_formers.dedup();
        let vertex_index = vertices.iter().enumerate().map(|(i, v)| (v.clone(), i)).collect();
        let edge_index = edges
            .iter()
            .enumerate()
            .map(|(k, &(i, j))| ((i.min(j), i.max(j)), k))
            .collect();
        Self {
            vertex_bus: (0..vertices.len()).collect(),
            edge_line: (0..edges.len()).collect(),
            vertices,
            edges,
            grid_formers,
            vertex_index,
            edge_index,
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex(&self, id: &str) -> Option<usize> {
        self.vertex_index.get(id).copied()
    }

    /// Edge joining two vertices, in either direction.
    pub fn edge_between(&self, a: usize, b: usize) -> Option<usize> {
        self.edge_index.get(&(a.min(b), a.max(b))).copied()
    }

    pub fn is_grid_former(&self, v: usize) -> bool {
        self.grid_formers.binary_search(&v).is_ok()
    }

    /// Branch-bus incidence matrix: row k has +1 at the tail and -1 at the
    /// head of edge k.
    pub fn incidence_matrix(&self) -> CscMatrix {
        let mut t = Vec::with_capacity(2 * self.edges.len());
        for (k, &(i, j)) in self.edges.iter().enumerate() {
            t.push((k, i, 1.0));
            t.push((k, j, -1.0));
        }
        CscMatrix::from_triplets(self.edges.len(), self.vertices.len(), &t)
    }

    pub fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for (k, &(i, j)) in self.edges.iter().enumerate() {
            adj[i].push((j, k));
            adj[j].push((i, k));
        }
        adj
    }

    /// Connected components of the whole graph, each listed in ascending
    /// vertex order; components are ordered by their smallest vertex.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let all_v = vec![true; self.vertices.len()];
        let all_e = vec![true; self.edges.len()];
        label_components(self, &all_v, &all_e).1
    }

    /// A spanning forest found by breadth-first search from the smallest
    /// vertex of each component, as a 0/1 mask over edges.
    pub fn bfs_spanning_forest(&self) -> Vec<bool> {
        let adj = self.adjacency();
        let mut seen = vec![false; self.vertices.len()];
        let mut chosen = vec![false; self.edges.len()];
        for s in 0..self.vertices.len() {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut q = VecDeque::from([s]);
            while let Some(u) = q.pop_front() {
                for &(w, k) in &adj[u] {
                    if !seen[w] {
                        seen[w] = true;
                        chosen[k] = true;
                        q.push_back(w);
                    }
                }
            }
        }
        chosen
    }

    /// Classifies an energization pattern. Components span the energized
    /// vertices together with every endpoint of an energized edge.
    pub fn check_topology(
        &self,
        energized_nodes: &[bool],
        energized_edges: &[bool],
        grid_formers: &[usize],
    ) -> Result<TopologyReport, NetworkError> {
        if energized_nodes.len() != self.vertices.len() {
            return Err(NetworkError::SizeMismatch {
                what: "energized_nodes",
                expected: self.vertices.len(),
                got: energized_nodes.len(),
            });
        }
        if energized_edges.len() != self.edges.len() {
            return Err(NetworkError::SizeMismatch {
                what: "energized_edges",
                expected: self.edges.len(),
                got: energized_edges.len(),
            });
        }
        if let Some(&v) = grid_formers.iter().find(|&&v| v >= self.vertices.len()) {
            return Err(NetworkError::RefOutOfRange {
                index: v,
                count: self.vertices.len(),
            });
        }
        let mut member = energized_nodes.to_vec();
        let mut dangling = Vec::new();
        for (k, &(i, j)) in self.edges.iter().enumerate() {
            if energized_edges[k] {
                if !(energized_nodes[i] && energized_nodes[j]) {
                    dangling.push(k);
                }
                member[i] = true;
                member[j] = true;
            }
        }
        let (label, comps) = label_components(self, &member, energized_edges);
        let mut edge_count = vec![0usize; comps.len()];
        for (k, &(i, _)) in self.edges.iter().enumerate() {
            if energized_edges[k] {
                edge_count[label[i]] += 1;
            }
        }
        let is_forest = comps.iter().zip(&edge_count).all(|(c, &e)| e + 1 == c.len());
        let mut has_gf = vec![false; comps.len()];
        for &v in grid_formers {
            if member[v] {
                has_gf[label[v]] = true;
            }
        }
        let without: Vec<usize> = (0..comps.len()).filter(|&c| !has_gf[c]).collect();
        Ok(TopologyReport {
            is_forest,
            components: comps
                .iter()
                .map(|c| c.iter().map(|&v| self.vertices[v].clone()).collect())
                .collect(),
            components_without_grid_former: without,
            dangling_energized_edges: dangling,
        })
    }
}

/// Breadth-first labeling restricted to `member` vertices and `active`
/// edges. Unlabeled vertices get `usize::MAX`.
fn label_components(g: &PartitionGraph, member: &[bool], active: &[bool]) -> (Vec<usize>, Vec<Vec<usize>>) {
    let adj = g.adjacency();
    let mut label = vec![usize::MAX; g.vertices.len()];
    let mut comps = Vec::new();
    for s in 0..g.vertices.len() {
        if !member[s] || label[s] != usize::MAX {
            continue;
        }
        let c = comps.len();
        label[s] = c;
        let mut comp = vec![s];
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            for &(w, k) in &adj[u] {
                if active[k] && label[w] == usize::MAX {
                    label[w] = c;
                    comp.push(w);
                    q.push_back(w);
                }
            }
        }
        comp.sort_unstable();
        comps.push(comp);
    }
    (label, comps)
}

/// Drops column `reference` from an incidence matrix.
pub fn reduced_incidence(a: &CscMatrix, reference: usize) -> Result<CscMatrix, NetworkError> {
    if reference >= a.ncols {
        return Err(NetworkError::RefOutOfRange {
            index: reference,
            count: a.ncols,
        });
    }
    let mut t = Vec::with_capacity(a.nnz());
    for j in (0..a.ncols).filter(|&j| j != reference) {
        let c = if j > reference { j - 1 } else { j };
        let (rows, vals) = a.col(j);
        for (&i, &v) in rows.iter().zip(vals) {
            t.push((i, c, v));
        }
    }
    Ok(CscMatrix::from_triplets(a.nrows, a.ncols - 1, &t))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TopologyReport {
    pub is_forest: bool,
    /// Vertex ids of each energized component.
    pub components: Vec<Vec<String>>,
    /// Indices into `components`.
    pub components_without_grid_former: Vec<usize>,
    /// Edge indices energized while an endpoint is not.
    pub dangling_energized_edges: Vec<usize>,
}

impl TopologyReport {
    /// Radial, every island has a grid-former, and no edge dangles.
    pub fn is_valid(&self) -> bool {
        self.is_forest
            && self.components_without_grid_former.is_empty()
            && self.dangling_energized_edges.is_empty()
    }
}
