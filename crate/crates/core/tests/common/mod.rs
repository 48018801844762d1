//! Oracles shared by the integration tests. Nothing here calls the crate's
//! own LP or MILP code: the dispatch LP is written out by hand and solved by
//! a dense tableau simplex.
#![allow(dead_code)]

use mgpart::network::{Bus, FeederNetwork, Line, PartitionGraph};
use mgpart::scenario::Scenario;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const V_LO: f64 = 0.95;
pub const V_HI: f64 = 1.05;

/// Dense tableau for `min c^T y, A y = b, y >= 0`. Returns the optimal value
/// or `None` if infeasible.
pub fn tableau_min(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Option<f64> {
    const EPS: f64 = 1e-11;
    let m = a.len();
    let n = c.len();
    // columns: n originals, m artificials, then rhs
    let w = n + m + 1;
    let mut t: Vec<Vec<f64>> = Vec::with_capacity(m);
    for i in 0..m {
        let sgn = if b[i] < 0.0 { -1.0 } else { 1.0 };
        let mut row = vec![0.0; w];
        for j in 0..n {
            row[j] = sgn * a[i][j];
        }
        row[n + i] = 1.0;
        row[w - 1] = sgn * b[i];
        t.push(row);
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    fn pivot(t: &mut [Vec<f64>], basis: &mut [usize], r: usize, q: usize) {
        let pv = t[r][q];
        for v in t[r].iter_mut() {
            *v /= pv;
        }
        let pr = t[r].clone();
        for (i, row) in t.iter_mut().enumerate() {
            if i != r && row[q] != 0.0 {
                let f = row[q];
                for (v, p) in row.iter_mut().zip(&pr) {
                    *v -= f * p;
                }
            }
        }
        basis[r] = q;
    }

    fn run(t: &mut [Vec<f64>], basis: &mut [usize], cost: &[f64], allowed: usize) -> bool {
        let w = t[0].len();
        loop {
            // reduced costs
            let mut q = None;
            for j in 0..allowed {
                if basis.contains(&j) {
                    continue;
                }
                let mut dj = cost[j];
                for (i, &bi) in basis.iter().enumerate() {
                    dj -= cost[bi] * t[i][j];
                }
                if dj < -1e-10 {
                    q = Some(j);
                    break;
                }
            }
            let Some(q) = q else { return true };
            let mut r = None;
            let mut best = f64::INFINITY;
            for i in 0..t.len() {
                if t[i][q] > EPS {
                    let ratio = t[i][w - 1] / t[i][q];
                    if ratio < best - 1e-12 || (ratio <= best + 1e-12 && r.is_some_and(|k: usize| basis[i] < basis[k])) {
                        best = ratio;
                        r = Some(i);
                    }
                }
            }
            let Some(r) = r else { return false };
            pivot(t, basis, r, q);
        }
    }

    if m == 0 {
        return Some(if c.iter().all(|&v| v >= 0.0) { 0.0 } else { f64::NEG_INFINITY });
    }
    let mut phase1 = vec![0.0; n + m];
    for v in phase1.iter_mut().skip(n) {
        *v = 1.0;
    }
    run(&mut t, &mut basis, &phase1, n + m);
    let infeas: f64 = (0..m).filter(|&i| basis[i] >= n).map(|i| t[i][w - 1]).sum();
    if infeas > 1e-8 {
        return None;
    }
    // drive artificials out of the basis
    let mut i = 0;
    while i < t.len() {
        if basis[i] >= n {
            if let Some(q) = (0..n).find(|&j| t[i][j].abs() > 1e-9) {
                pivot(&mut t, &mut basis, i, q);
            } else {
                t.remove(i);
                basis.remove(i);
                continue;
            }
        }
        i += 1;
    }
    let mut cost = c.to_vec();
    cost.extend(std::iter::repeat_n(0.0, m));
    if t.is_empty() {
        return Some(0.0);
    }
    if !run(&mut t, &mut basis, &cost, n) {
        return Some(f64::NEG_INFINITY);
    }
    Some((0..t.len()).map(|i| cost[basis[i]] * t[i][w - 1]).sum())
}


/// `lo <= x <= hi` with equality rows, as a feasibility question.
#[derive(Default)]
pub struct BoxLp {
    lo: Vec<f64>,
    hi: Vec<f64>,
    rows: Vec<(Vec<(usize, f64)>, f64)>,
}

impl BoxLp {
    pub fn var(&mut self, lo: f64, hi: f64) -> usize {
        self.lo.push(lo);
        self.hi.push(hi);
        self.lo.len() - 1
    }

    pub fn eq(&mut self, terms: Vec<(usize, f64)>, rhs: f64) {
        self.rows.push((terms, rhs));
    }

    pub fn feasible(&self) -> bool {
        let n = self.lo.len();
        if self.lo.iter().zip(&self.hi).any(|(l, h)| l > h) {
            return false;
        }
        // x = lo + y, y + s = hi - lo
        let cols = 2 * n;
        let mut a = Vec::new();
        let mut b = Vec::new();
        for (terms, rhs) in &self.rows {
            let mut row = vec![0.0; cols];
            let mut r = *rhs;
            for &(j, c) in terms {
                row[j] += c;
                r -= c * self.lo[j];
            }
            a.push(row);
            b.push(r);
        }
        for j in 0..n {
            let mut row = vec![0.0; cols];
            row[j] = 1.0;
            row[n + j] = 1.0;
            a.push(row);
            b.push(self.hi[j] - self.lo[j]);
        }
        tableau_min(&a, &b, &vec![0.0; cols]).is_some()
    }
}

/// Whether the island made of `verts` joined by `edges` (partition-graph
/// indices) can serve all of its load under `xi`.
pub fn island_feasible(net: &FeederNetwork, g: &PartitionGraph, xi: &Scenario, verts: &[usize], edges: &[usize]) -> bool {
    let mut lp = BoxLp::default();
    let local = |v: usize| verts.iter().position(|&u| u == v).expect("edge inside the island");
    let mut pg = Vec::new();
    let mut qg = Vec::new();
    let mut vv = Vec::new();
    for &v in verts {
        let bus = &net.buses[g.vertex_bus[v]];
        pg.push(lp.var(0.0, xi.gp[v]));
        qg.push(lp.var(-bus.qmin, xi.gq[v]));
        vv.push(lp.var(V_LO, V_HI));
    }
    let mut pbal: Vec<Vec<(usize, f64)>> = pg.iter().map(|&p| vec![(p, 1.0)]).collect();
    let mut qbal: Vec<Vec<(usize, f64)>> = qg.iter().map(|&q| vec![(q, 1.0)]).collect();
    for &e in edges {
        let line = &net.lines[g.edge_line[e]];
        let (i, j) = (local(g.edges[e].0), local(g.edges[e].1));
        let p = lp.var(-line.pmax, line.pmax);
        let q = lp.var(-line.qmax, line.qmax);
        // P, Q flow from i to j; voltage falls along the flow
        pbal[i].push((p, -1.0));
        pbal[j].push((p, 1.0));
        qbal[i].push((q, -1.0));
        qbal[j].push((q, 1.0));
        lp.eq(vec![(vv[i], 1.0), (vv[j], -1.0), (p, -line.r), (q, -line.x)], 0.0);
    }
    for (k, &v) in verts.iter().enumerate() {
        lp.eq(pbal[k].clone(), xi.dp[v]);
        lp.eq(qbal[k].clone(), xi.dq[v]);
    }
    lp.feasible()
}

/// Connected components of `verts` under `edges`.
pub fn components(g: &PartitionGraph, edges: &[usize]) -> Vec<(Vec<usize>, Vec<usize>)> {
    let n = g.num_vertices();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        p[x] = r;
        r
    }
    let mut touched = vec![false; n];
    for &e in edges {
        let (i, j) = g.edges[e];
        touched[i] = true;
        touched[j] = true;
        let (a, b) = (find(&mut parent, i), find(&mut parent, j));
        parent[a] = b;
    }
    let mut out: Vec<(usize, Vec<usize>, Vec<usize>)> = Vec::new();
    for v in (0..n).filter(|&v| touched[v]) {
        let r = find(&mut parent, v);
        match out.iter_mut().find(|c| c.0 == r) {
            Some(c) => c.1.push(v),
            None => out.push((r, vec![v], Vec::new())),
        }
    }
    for &e in edges {
        let r = find(&mut parent, g.edges[e].0);
        out.iter_mut().find(|c| c.0 == r).unwrap().2.push(e);
    }
    out.into_iter().map(|(_, v, e)| (v, e)).collect()
}

/// Every acyclic subset of the graph's edges, as edge index lists.
pub fn forests(g: &PartitionGraph) -> Vec<Vec<usize>> {
    let m = g.num_edges();
    assert!(m <= 20, "too many edges to enumerate");
    let mut out = Vec::new();
    'mask: for mask in 0u32..(1 << m) {
        let mut parent: Vec<usize> = (0..g.num_vertices()).collect();
        let mut edges = Vec::new();
        for e in (0..m).filter(|e| mask >> e & 1 == 1) {
            let (mut a, mut b) = g.edges[e];
            while parent[a] != a {
                a = parent[a];
            }
            while parent[b] != b {
                b = parent[b];
            }
            if a == b {
                continue 'mask;
            }
            parent[a] = b;
            edges.push(e);
        }
        out.push(edges);
    }
    out
}

/// An island design: energized lines, plus grid-formers running alone.
#[derive(Clone, Debug)]
pub struct Design {
    pub edges: Vec<usize>,
    pub lone: Vec<usize>,
}

/// Every design whose islands each hold a grid-former.
pub fn designs(g: &PartitionGraph) -> Vec<Design> {
    let mut out = Vec::new();
    for edges in forests(g) {
        let comps = components(g, &edges);
        if !comps.iter().all(|(vs, _)| vs.iter().any(|v| g.grid_formers.contains(v))) {
            continue;
        }
        let free: Vec<usize> = g.grid_formers.iter().copied().filter(|v| !comps.iter().any(|(vs, _)| vs.contains(v))).collect();
        for mask in 0u32..(1 << free.len()) {
            let lone = free.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, &v)| v).collect();
            out.push(Design { edges: edges.clone(), lone });
        }
    }
    out
}

/// Active load the design serves under `xi`, or `None` if some island
/// cannot meet its demand.
pub fn design_served(net: &FeederNetwork, g: &PartitionGraph, xi: &Scenario, d: &Design) -> Option<f64> {
    let mut served = 0.0;
    let mut islands = components(g, &d.edges);
    islands.extend(d.lone.iter().map(|&v| (vec![v], Vec::new())));
    for (vs, es) in islands {
        if !island_feasible(net, g, xi, &vs, &es) {
            return None;
        }
        served += vs.iter().map(|&v| xi.dp[v]).sum::<f64>();
    }
    Some(served)
}

/// Brute-force optimum of the single-scenario problem: minus the most load
/// any feasible design serves.
pub fn brute_force_deterministic(net: &FeederNetwork, xi: &Scenario) -> f64 {
    let g = PartitionGraph::new(net);
    let best = designs(&g).iter().filter_map(|d| design_served(net, &g, xi, d)).fold(0.0, f64::max);
    -best
}

/// A connected random feeder: a substation feeding bus 1, a random tree over
/// buses 1..n plus extra lines up to `max_edges`, and one to three
/// grid-formers.
pub fn random_network(rng: &mut ChaCha8Rng, max_buses: usize, max_edges: usize) -> FeederNetwork {
    let n = rng.random_range(3..max_buses);
    let mut buses = vec![Bus::new("S")];
    for k in 1..=n {
        let mut b = Bus::new(format!("n{k}"));
        b.dp = rng.random_range(0.05..0.5);
        b.dq = b.dp * rng.random_range(0.2..0.5);
        buses.push(b);
    }
    let gfs = rng.random_range(1..=3.min(n));
    let mut order: Vec<usize> = (1..=n).collect();
    for k in (1..order.len()).rev() {
        order.swap(k, rng.random_range(0..=k));
    }
    for &k in order.iter().take(gfs) {
        let b = &mut buses[k];
        b.grid_forming = true;
        b.gp = rng.random_range(0.2..1.2);
        b.gq = rng.random_range(0.1..0.6);
        b.qmin = rng.random_range(0.0..0.2);
    }
    for &k in order.iter().skip(gfs) {
        if rng.random_bool(0.3) {
            buses[k].gp = rng.random_range(0.05..0.4);
        }
    }
    let line = |rng: &mut ChaCha8Rng, a: usize, b: usize| {
        let mut l = Line::new(format!("n{a}"), format!("n{b}"), rng.random_range(0.005..0.08), rng.random_range(0.005..0.08), 0.0);
        l.pmax = rng.random_range(0.3..1.5);
        l.qmax = rng.random_range(0.3..1.5);
        l
    };
    let mut lines = vec![Line::new("S", "n1", 0.01, 0.01, 2.0)];
    let mut pairs = Vec::new();
    for k in 2..=n {
        let p = rng.random_range(1..k);
        pairs.push((p, k));
        lines.push(line(rng, p, k));
    }
    let mut tries = 0;
    while lines.len() - 1 < max_edges && tries < 50 {
        tries += 1;
        let (a, b) = (rng.random_range(1..=n), rng.random_range(1..=n));
        if a == b || pairs.iter().any(|&(x, y)| (x, y) == (a.min(b), a.max(b)) || (x, y) == (a.max(b), a.min(b))) {
            continue;
        }
        if rng.random_bool(0.5) {
            break;
        }
        pairs.push((a.min(b), a.max(b)));
        let mut l = line(rng, a, b);
        l.normally_open = true;
        lines.push(l);
    }
    FeederNetwork::new("random", 1.0, "S", buses, lines).expect("generator builds valid feeders")
}
