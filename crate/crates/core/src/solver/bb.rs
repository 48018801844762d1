//! Best-first branch and bound with depth-first plunging over the dual simplex.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::rc::Rc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::simplex::{Basis, DualSimplex, LpProblem, SimplexOptions, SimplexStatus};
use super::SolverError;
use crate::milp::{evaluate, Assignment, MilpModel, VarId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchingRule {
    /// Fractional part closest to 0.5; ties to the lowest variable index.
    MostFractional,
    /// Lowest-index fractional binary.
    FirstFractional,
    /// Uniformly random fractional binary drawn from the seeded generator.
    Random,
    /// Pseudocost product score; candidates with too little history are
    /// scored by a short strong-branching solve first.
    Reliability,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeOrder {
    /// Lowest bound first, plunging into a child after each branching.
    BestFirst,
    /// Most recently created node first.
    DepthFirst,
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub time_limit: Option<Duration>,
    pub gap_tolerance: f64,
    pub integrality_tolerance: f64,
    pub branching: BranchingRule,
    pub node_order: NodeOrder,
    pub seed: u64,
    pub node_limit: Option<usize>,
    /// Known feasible point; replaced only by strictly better ones.
    pub initial_incumbent: Option<Assignment>,
    /// Per-variable branching priority (higher first); fractionality decides within a level.
    pub priorities: Option<Vec<i32>>,
    /// Run diving and RINS primal heuristics during the search.
    pub heuristics: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            time_limit: None,
            gap_tolerance: 1e-6,
            integrality_tolerance: 1e-6,
            branching: BranchingRule::MostFractional,
            node_order: NodeOrder::BestFirst,
            seed: 0,
            node_limit: None,
            initial_incumbent: None,
            priorities: None,
            heuristics: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MilpStatus {
    Optimal,
    /// Stopped by the node limit with an incumbent.
    Feasible,
    Infeasible,
    TimeLimit,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MilpResult {
    pub status: MilpStatus,
    pub incumbent: Option<Assignment>,
    /// Objective of the incumbent, `+inf` without one.
    pub objective: f64,
    pub bound: f64,
    pub gap: f64,
    pub nodes_explored: usize,
    pub lp_iterations: usize,
    /// Nodes abandoned after repeated LP failures.
    pub abandoned_nodes: usize,
    #[serde(with = "duration_secs")]
    pub wall_time: Duration,
}

mod duration_secs {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_secs_f64(f64::deserialize(d)?.max(0.0)))
    }
}

pub fn relative_gap(incumbent: f64, bound: f64) -> f64 {
    if !incumbent.is_finite() {
        return f64::INFINITY;
    }
    ((incumbent - bound) / incumbent.abs().max(1.0)).max(0.0)
}

struct Node {
    bound: f64,
    depth: usize,
    seq: u64,
    fixings: Vec<(usize, f64)>,
    basis: Rc<Basis>,
    /// Branching that created the node: variable, direction, distance moved.
    origin: Option<(usize, usize, f64)>,
}

/// Per-direction objective gain per unit change, as sums and counts.
#[derive(Clone, Default)]
struct Pseudocosts {
    sum: [Vec<f64>; 2],
    count: [Vec<u32>; 2],
}

impl Pseudocosts {
    fn new(n: usize) -> Self {
        Self {
            sum: [vec![0.0; n], vec![0.0; n]],
            count: [vec![0; n], vec![0; n]],
        }
    }

    fn record(&mut self, j: usize, dir: usize, gain: f64) {
        self.sum[dir][j] += gain.max(0.0);
        self.count[dir][j] += 1;
    }

    fn reliable(&self, j: usize) -> bool {
        self.count[0][j].min(self.count[1][j]) >= RELIABILITY
    }

    /// Unit gain estimate; unseen directions use the mean over seen ones.
    fn estimate(&self, j: usize, dir: usize) -> f64 {
        if self.count[dir][j] > 0 {
            return self.sum[dir][j] / f64::from(self.count[dir][j]);
        }
        let (s, c) = self.sum[dir]
            .iter()
            .zip(&self.count[dir])
            .filter(|(_, &c)| c > 0)
            .fold((0.0, 0u32), |(s, c), (&a, &b)| (s + a / f64::from(b), c + 1));
        if c == 0 {
            1.0
        } else {
            s / f64::from(c)
        }
    }
}

/// Branching history needed before pseudocosts are trusted.
const RELIABILITY: u32 = 4;
/// Candidates strong-branched per node at most.
const STRONG_CANDIDATES: usize = 12;
/// Dual simplex iterations per strong-branching child.
const STRONG_ITERATIONS: usize = 60;

fn score(down: f64, up: f64) -> f64 {
    down.max(1e-6) * up.max(1e-6)
}

struct Queued {
    node: Node,
    order: NodeOrder,
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Queued {}
impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Queued {
    // BinaryHeap pops the greatest element
    fn cmp(&self, other: &Self) -> Ordering {
        match self.order {
            NodeOrder::BestFirst => other
                .node
                .bound
                .total_cmp(&self.node.bound)
                .then(self.node.depth.cmp(&other.node.depth))
                .then(other.node.seq.cmp(&self.node.seq)),
            NodeOrder::DepthFirst => self.node.seq.cmp(&other.node.seq),
        }
    }
}

struct Search<'m, 'p> {
    model: &'m MilpModel,
    opt: &'m SolveOptions,
    lp: &'p LpProblem,
    simplex: DualSimplex<'p>,
    bins: Vec<usize>,
    root_lo: Vec<f64>,
    root_hi: Vec<f64>,
    applied: Vec<usize>,
    incumbent: Option<(f64, Assignment)>,
    rng: ChaCha8Rng,
    deadline: Option<Instant>,
    lp_iterations: usize,
    pseudo: Pseudocosts,
}

impl<'m, 'p> Search<'m, 'p> {
    fn cutoff(&self) -> f64 {
        match &self.incumbent {
            Some((v, _)) => v - self.opt.gap_tolerance * v.abs().max(1.0),
            None => f64::INFINITY,
        }
    }

    fn apply(&mut self, fixings: &[(usize, f64)]) {
        for &j in &self.applied {
            self.simplex.set_col_bounds(j, self.root_lo[j], self.root_hi[j]);
        }
        self.applied.clear();
        for &(j, v) in fixings {
            self.simplex.set_col_bounds(j, v, v);
            self.applied.push(j);
        }
    }

    fn simplex_opts(&self) -> SimplexOptions {
        SimplexOptions {
            max_iterations: None,
            deadline: self.deadline,
        }
    }

    fn solve_node(&mut self) -> SimplexStatus {
        let before = self.simplex.iterations();
        let st = self.simplex.solve(&self.simplex_opts());
        self.lp_iterations += self.simplex.iterations() - before;
        st
    }

    /// Rebuilds the simplex from the slack basis and re-solves the node.
    fn solve_from_scratch(&mut self, fixings: &[(usize, f64)]) -> SimplexStatus {
        self.simplex = DualSimplex::new(self.lp);
        self.applied.clear();
        self.apply(fixings);
        self.solve_node()
    }

    /// Reliability branching over the fractional candidates.
    fn pick_reliable(&mut self, x: &[f64], obj: f64, fractional: &[usize]) -> usize {
        let frac = |j: usize| x[j] - x[j].floor();
        let mut order = fractional.to_vec();
        // most fractional first so strong branching looks at those
        order.sort_by(|&a, &b| {
            let fa = frac(a).min(1.0 - frac(a));
            let fb = frac(b).min(1.0 - frac(b));
            fb.total_cmp(&fa).then(a.cmp(&b))
        });
        let cutoff = self.cutoff();
        let opts = SimplexOptions {
            max_iterations: Some(STRONG_ITERATIONS),
            deadline: self.deadline,
        };
        let mut strong = 0usize;
        let mut best = (f64::NEG_INFINITY, order[0]);
        for &j in &order {
            let f = frac(j);
            let (down, up) = if self.pseudo.reliable(j) || strong >= STRONG_CANDIDATES {
                (self.pseudo.estimate(j, 0) * f, self.pseudo.estimate(j, 1) * (1.0 - f))
            } else {
                strong += 1;
                let mut gains = [0.0; 2];
                for (dir, v) in [(0usize, 0.0), (1, 1.0)] {
                    let mut lp = self.simplex.clone();
                    let before = lp.iterations();
                    lp.set_col_bounds(j, v, v);
                    let st = lp.solve(&opts);
                    self.lp_iterations += lp.iterations() - before;
                    let dist = if dir == 0 { f } else { 1.0 - f };
                    gains[dir] = match st {
                        SimplexStatus::Infeasible => f64::INFINITY,
                        SimplexStatus::Optimal | SimplexStatus::IterationLimit => {
                            let o = lp.objective();
                            if st == SimplexStatus::Optimal && o >= cutoff {
                                f64::INFINITY
                            } else {
                                let g = (o - obj).max(0.0);
                                if st == SimplexStatus::Optimal {
                                    self.pseudo.record(j, dir, g / dist);
                                }
                                g
                            }
                        }
                        _ => 0.0,
                    };
                }
                (gains[0], gains[1])
            };
            let sc = score(down, up);
            if sc > best.0 {
                best = (sc, j);
            }
            if sc == f64::INFINITY {
                break;
            }
        }
        best.1
    }

    fn pick_branch(&mut self, x: &[f64], obj: f64) -> Option<usize> {
        let tol = self.opt.integrality_tolerance;
        let mut fractional: Vec<usize> = Vec::new();
        for &j in &self.bins {
            let f = x[j] - x[j].floor();
            if f.min(1.0 - f) > tol {
                fractional.push(j);
            }
        }
        if fractional.is_empty() {
            return None;
        }
        if let Some(pr) = &self.opt.priorities {
            let top = fractional.iter().map(|&j| pr[j]).max().unwrap();
            fractional.retain(|&j| pr[j] == top);
        }
        Some(match self.opt.branching {
            BranchingRule::FirstFractional => fractional[0],
            BranchingRule::Random => fractional[self.rng.random_range(0..fractional.len())],
            BranchingRule::Reliability => self.pick_reliable(x, obj, &fractional),
            BranchingRule::MostFractional => {
                let mut best = fractional[0];
                let mut best_score = -1.0;
                for &j in &fractional {
                    let f = x[j] - x[j].floor();
                    let score = f.min(1.0 - f);
                    if score > best_score {
                        best_score = score;
                        best = j;
                    }
                }
                best
            }
        })
    }

    /// Offers an integral LP point as incumbent; returns true if accepted.
    fn offer(&mut self, x: &[f64]) -> bool {
        let mut vals = x.to_vec();
        for &j in &self.bins {
            vals[j] = vals[j].round();
        }
        let mut cand = Assignment(vals);
        let ok = evaluate(self.model, &cand).map(|e| e.feasible).unwrap_or(false);
        if !ok {
            // re-solve with the binaries fixed at their rounded values
            let mut polish = self.simplex.clone();
            for &j in &self.bins {
                polish.set_col_bounds(j, cand.0[j], cand.0[j]);
            }
            if polish.solve(&self.simplex_opts()) != SimplexStatus::Optimal {
                log::warn!("integral node point could not be polished");
                return false;
            }
            let mut vals = polish.primal().to_vec();
            for &j in &self.bins {
                vals[j] = cand.0[j];
            }
            cand = Assignment(vals);
            match evaluate(self.model, &cand) {
                Ok(e) if e.feasible => {}
                _ => {
                    log::warn!("integral node point failed validation after polishing");
                    return false;
                }
            }
        }
        let obj = self.model.objective_value(&cand.0);
        let better = match &self.incumbent {
            Some((v, _)) => obj < *v,
            None => true,
        };
        if better {
            self.incumbent = Some((obj, cand));
        }
        better
    }

    /// Most urgent fractional binary for diving: highest priority, then
    /// least fractional. Fixed columns are skipped.
    fn dive_pick(&self, lp: &DualSimplex, x: &[f64]) -> Option<usize> {
        let tol = self.opt.integrality_tolerance;
        let mut pick: Option<(i32, f64, usize)> = None;
        for &j in &self.bins {
            let (lo, hi) = lp.col_bounds(j);
            if lo == hi {
                continue;
            }
            let f = x[j] - x[j].floor();
            let d = f.min(1.0 - f);
            if d <= tol {
                continue;
            }
            let pr = self.opt.priorities.as_ref().map_or(0, |p| p[j]);
            let better = match pick {
                None => true,
                Some((bp, bd, _)) => pr > bp || (pr == bp && d < bd),
            };
            if better {
                pick = Some((pr, d, j));
            }
        }
        pick.map(|(_, _, j)| j)
    }

    /// Fractional dive from the current node LP. Each step rounds one
    /// binary to its nearest value and re-solves; an infeasible step is
    /// flipped once before the dive gives up.
    fn dive(&mut self) -> bool {
        let t = Instant::now();
        let mut lp = self.simplex.clone();
        let opts = self.simplex_opts();
        let before = lp.iterations();
        let mut found = false;
        for _ in 0..=self.bins.len() {
            let x = lp.primal().to_vec();
            let Some(j) = self.dive_pick(&lp, &x) else {
                found = self.offer(&x);
                break;
            };
            let v = x[j].round();
            lp.set_col_bounds(j, v, v);
            let mut st = lp.solve(&opts);
            if st == SimplexStatus::Infeasible {
                lp.set_col_bounds(j, 1.0 - v, 1.0 - v);
                st = lp.solve(&opts);
            }
            if st != SimplexStatus::Optimal || lp.objective() >= self.cutoff() {
                break;
            }
        }
        self.lp_iterations += lp.iterations() - before;
        log::debug!("dive: {} iterations, {:?}, improved {found}", lp.iterations() - before, t.elapsed());
        found
    }

    /// Relaxation induced neighborhood search: binaries on which the node
    /// LP agrees with the incumbent are fixed and the rest is searched with
    /// a small node budget.
    fn rins(&mut self, x: &[f64]) -> bool {
        let Some((best, inc)) = &self.incumbent else {
            return false;
        };
        let (best, inc) = (*best, inc.clone());
        let mut sub = self.model.clone();
        let mut fixed = 0usize;
        for &j in &self.bins {
            if (x[j] - inc.0[j]).abs() <= self.opt.integrality_tolerance {
                sub.set_bounds(VarId(j), inc.0[j], inc.0[j]).expect("binary bounds");
                fixed += 1;
            }
        }
        if fixed * 2 < self.bins.len() || fixed == self.bins.len() {
            return false;
        }
        let opt = SolveOptions {
            time_limit: self.deadline.map(|d| d.saturating_duration_since(Instant::now())),
            gap_tolerance: self.opt.gap_tolerance,
            integrality_tolerance: self.opt.integrality_tolerance,
            branching: self.opt.branching,
            node_order: self.opt.node_order,
            seed: self.opt.seed,
            node_limit: Some(RINS_NODES),
            initial_incumbent: Some(inc),
            priorities: self.opt.priorities.clone(),
            heuristics: false,
        };
        let Ok(r) = solve_milp(&sub, &opt) else {
            return false;
        };
        self.lp_iterations += r.lp_iterations;
        log::debug!(
            "rins: fixed {fixed}/{}, {} nodes, {:?}, {} -> {}",
            self.bins.len(),
            r.nodes_explored,
            r.wall_time,
            best,
            r.objective
        );
        match r.incumbent {
            Some(a) if r.objective < best => self.offer(&a.0),
            _ => false,
        }
    }
}

/// Node budget of one RINS sub-search.
const RINS_NODES: usize = 500;
/// Nodes between periodic dives.
const DIVE_FREQ: usize = 50;
/// Nodes between periodic RINS calls.
const RINS_FREQ: usize = 200;

/// Solves `m` to optimality (within the gap tolerance) or until a limit is hit.
pub fn solve_milp(m: &MilpModel, opt: &SolveOptions) -> Result<MilpResult, SolverError> {
    let start = Instant::now();
    let lp = LpProblem::from_model(m);
    let bins: Vec<usize> = m
        .variables()
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_binary())
        .map(|(j, _)| j)
        .collect();
    if let Some(p) = &opt.priorities {
        if p.len() != m.num_vars() {
            return Err(SolverError::Numerical(format!(
                "priority vector has {} entries for {} variables",
                p.len(),
                m.num_vars()
            )));
        }
    }

    let mut s = Search {
        model: m,
        opt,
        lp: &lp,
        simplex: DualSimplex::new(&lp),
        bins,
        root_lo: lp.col_lo.clone(),
        root_hi: lp.col_hi.clone(),
        applied: Vec::new(),
        incumbent: None,
        rng: ChaCha8Rng::seed_from_u64(opt.seed),
        deadline: opt.time_limit.map(|t| start + t),
        lp_iterations: 0,
        pseudo: Pseudocosts::new(m.num_vars()),
    };
    if let Some(a) = &opt.initial_incumbent {
        match evaluate(m, a) {
            Ok(e) if e.feasible => s.incumbent = Some((e.objective, a.clone())),
            Ok(e) => log::warn!(
                "initial incumbent rejected (violation {:e} at {:?})",
                e.max_violation,
                e.worst
            ),
            Err(e) => log::warn!("initial incumbent rejected: {e}"),
        }
    }

    let mut queue: BinaryHeap<Queued> = BinaryHeap::new();
    let mut seq = 0u64;
    let root = Node {
        bound: f64::NEG_INFINITY,
        depth: 0,
        seq,
        fixings: Vec::new(),
        basis: Rc::new(s.simplex.basis()),
        origin: None,
    };
    // the node to process next without a basis restore (plunging)
    let mut plunge: Option<Node> = Some(root);
    let mut warm = true;
    let mut nodes = 0usize;
    let mut abandoned = 0usize;
    let mut abandoned_bound = f64::INFINITY;
    let mut best_bound = f64::NEG_INFINITY;
    let mut stopped: Option<MilpStatus> = None;

    let open_bound = |queue: &BinaryHeap<Queued>, plunge: &Option<Node>, ab: f64| -> f64 {
        let mut b = ab;
        if let Some(n) = plunge {
            b = b.min(n.bound);
        }
        if opt.node_order == NodeOrder::BestFirst {
            if let Some(q) = queue.peek() {
                b = b.min(q.node.bound);
            }
        } else {
            for q in queue.iter() {
                b = b.min(q.node.bound);
            }
        }
        b
    };

    loop {
        // global bound and gap test
        let ob = open_bound(&queue, &plunge, abandoned_bound);
        if let Some((v, _)) = &s.incumbent {
            let b = ob.min(*v);
            if b > best_bound {
                best_bound = b;
            }
            if relative_gap(*v, best_bound) <= opt.gap_tolerance {
                break;
            }
        } else if ob > best_bound && ob.is_finite() {
            best_bound = ob;
        }

        let node = match plunge.take() {
            Some(n) => n,
            None => match queue.pop() {
                Some(q) => {
                    warm = false;
                    q.node
                }
                None => break,
            },
        };
        if node.bound >= s.cutoff() {
            continue;
        }
        let over_nodes = opt.node_limit.is_some_and(|l| nodes >= l);
        let over_time = s.deadline.is_some_and(|d| Instant::now() >= d);
        if over_nodes || over_time {
            stopped = Some(if over_time { MilpStatus::TimeLimit } else { MilpStatus::Feasible });
            queue.push(Queued {
                node,
                order: opt.node_order,
            });
            break;
        }

        if warm {
            let new_fix = node.fixings.last().copied();
            if let Some((j, v)) = new_fix {
                s.simplex.set_col_bounds(j, v, v);
                s.applied.push(j);
            }
        } else {
            s.apply(&node.fixings);
            s.simplex.set_basis(&node.basis);
        }
        let mut status = s.solve_node();
        if let SimplexStatus::Numerical(msg) = &status {
            log::warn!("node LP failed ({msg}); re-solving from scratch");
            status = s.solve_from_scratch(&node.fixings);
        }
        nodes += 1;
        warm = true;
        if nodes % 50 == 0 {
            log::debug!(
                "nodes {nodes}, open {}, bound {best_bound:.6}, incumbent {:.6}, depth {}",
                queue.len(),
                s.incumbent.as_ref().map_or(f64::INFINITY, |i| i.0),
                node.depth
            );
        }
        match status {
            SimplexStatus::Infeasible => continue,
            SimplexStatus::TimeLimit => {
                stopped = Some(MilpStatus::TimeLimit);
                queue.push(Queued {
                    node,
                    order: opt.node_order,
                });
                break;
            }
            SimplexStatus::Numerical(_) | SimplexStatus::IterationLimit => {
                log::warn!("abandoning node at depth {} after repeated LP failure", node.depth);
                abandoned += 1;
                abandoned_bound = abandoned_bound.min(node.bound);
                s.simplex = DualSimplex::new(&lp);
                s.applied.clear();
                warm = false;
                continue;
            }
            SimplexStatus::Optimal => {}
        }

        let obj = s.simplex.objective().max(node.bound);
        if let Some((j, dir, dist)) = node.origin {
            if node.bound.is_finite() && dist > 0.0 {
                s.pseudo.record(j, dir, (obj - node.bound) / dist);
            }
        }
        if obj >= s.cutoff() {
            continue;
        }
        let x = s.simplex.primal().to_vec();
        let Some(j) = s.pick_branch(&x, obj) else {
            log::trace!("integral node at depth {} objective {obj:.6}", node.depth);
            s.offer(&x);
            continue;
        };
        if opt.heuristics && (nodes == 1 || nodes % DIVE_FREQ == 0) {
            s.dive();
        }
        if opt.heuristics && (nodes == 1 || nodes % RINS_FREQ == 0) {
            s.rins(&x);
        }

        let basis = Rc::new(s.simplex.basis());
        let mut child = |v: f64| {
            seq += 1;
            let mut fixings = node.fixings.clone();
            fixings.push((j, v));
            let dist = (v - x[j]).abs();
            Node {
                bound: obj,
                depth: node.depth + 1,
                seq,
                fixings,
                basis: Rc::clone(&basis),
                origin: Some((j, v as usize, dist)),
            }
        };
        log::trace!("branch on {} = {:.4} at depth {} bound {obj:.6}", m.variable(VarId(j)).name, x[j], node.depth);
        let (first, second) = if x[j] >= 0.5 { (1.0, 0.0) } else { (0.0, 1.0) };
        let near = child(first);
        let far = child(second);
        queue.push(Queued {
            node: far,
            order: opt.node_order,
        });
        plunge = Some(near);
    }

    let wall_time = start.elapsed();
    let ob = open_bound(&queue, &plunge, abandoned_bound);
    let (status, objective, incumbent) = match s.incumbent {
        Some((v, a)) => {
            let b = ob.min(v);
            if b > best_bound {
                best_bound = b;
            }
            let st = match stopped {
                Some(st) if relative_gap(v, best_bound) > opt.gap_tolerance => st,
                _ if abandoned > 0 && relative_gap(v, best_bound) > opt.gap_tolerance => {
                    MilpStatus::Feasible
                }
                _ => MilpStatus::Optimal,
            };
            (st, v, Some(a))
        }
        None => {
            let st = match stopped {
                Some(MilpStatus::TimeLimit) => MilpStatus::TimeLimit,
                _ if abandoned > 0 => {
                    return Err(SolverError::Numerical(format!(
                        "no incumbent and {abandoned} nodes abandoned after LP failures"
                    )))
                }
                Some(st) => st,
                None => MilpStatus::Infeasible,
            };
            if st == MilpStatus::Infeasible {
                best_bound = f64::INFINITY;
            }
            (st, f64::INFINITY, None)
        }
    };
    Ok(MilpResult {
        status,
        incumbent,
        objective,
        bound: best_bound,
        gap: relative_gap(objective, best_bound),
        nodes_explored: nodes,
        lp_iterations: s.lp_iterations,
        abandoned_nodes: abandoned,
        wall_time,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::Sense;

    #[test]
    fn integral_relaxation_needs_one_node() {
        let mut m = MilpModel::new("t");
        let x = m.add_binary("x").unwrap();
        let y = m.add_binary("y").unwrap();
        m.add_constraint("c", vec![(x, 1.0), (y, 1.0)], Sense::Le, 1.0).unwrap();
        m.set_objective(vec![(x, -2.0), (y, -1.0)]).unwrap();
        let r = solve_milp(&m, &SolveOptions::default()).unwrap();
        assert_eq!(r.status, MilpStatus::Optimal);
        assert_eq!(r.nodes_explored, 1);
        assert_eq!(r.objective, -2.0);
    }

    #[test]
    fn contradictory_binary_is_infeasible() {
        let mut m = MilpModel::new("t");
        let x = m.add_binary("x").unwrap();
        m.add_constraint("up", vec![(x, 1.0)], Sense::Ge, 1.0).unwrap();
        m.add_constraint("down", vec![(x, 1.0)], Sense::Le, 0.0).unwrap();
        let r = solve_milp(&m, &SolveOptions::default()).unwrap();
        assert_eq!(r.status, MilpStatus::Infeasible);
        assert!(r.incumbent.is_none());
    }

    #[test]
    fn fractional_relaxation_branches() {
        // 2x + 2y <= 3 with max x + y: LP 1.5, integer 1
        let mut m = MilpModel::new("t");
        let x = m.add_binary("x").unwrap();
        let y = m.add_binary("y").unwrap();
        m.add_constraint("c", vec![(x, 2.0), (y, 2.0)], Sense::Le, 3.0).unwrap();
        m.set_objective(vec![(x, -1.0), (y, -1.0)]).unwrap();
        let r = solve_milp(&m, &SolveOptions::default()).unwrap();
        assert_eq!(r.status, MilpStatus::Optimal);
        assert_eq!(r.objective, -1.0);
        assert!(r.nodes_explored > 1);
        assert!(r.bound <= r.objective);
    }

    #[test]
    fn initial_incumbent_is_kept_unless_beaten() {
        let mut m = MilpModel::new("t");
        let x = m.add_binary("x").unwrap();
        m.set_objective(vec![(x, 0.0)]).unwrap();
        let opt = SolveOptions {
            initial_incumbent: Some(Assignment(vec![1.0])),
            ..SolveOptions::default()
        };
        let r = solve_milp(&m, &opt).unwrap();
        assert_eq!(r.incumbent.unwrap().0, vec![1.0]);
    }
}
