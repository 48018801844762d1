//! Constructive starting point: islands grown outward from grid-forming
//! buses one line at a time, each step judged by per-island power balance in
//! every scenario. The final design is confirmed by an LP with all binaries
//! fixed, so only feasible points leave this module.

use super::{weights, OdnpModel};
use crate::milp::{evaluate, Assignment, VarId};
use crate::solver::{solve_lp, LpStatus};

const EPS: f64 = 1e-9;
/// Consecutive non-improving steps allowed while looking for a better design.
const PLATEAU_STEPS: usize = 3;
/// Leaf exchanges tried before settling.
const LOCAL_ROUNDS: usize = 60;

#[derive(Clone)]
struct Design {
    bn: Vec<bool>,
    be: Vec<bool>,
}

struct Scorer<'a> {
    m: &'a OdnpModel,
    w: Vec<f64>,
    rho: f64,
    need: usize,
}

impl Scorer<'_> {
    /// Island label per vertex (`usize::MAX` when de-energized).
    fn islands(&self, d: &Design) -> Vec<usize> {
        let g = &self.m.graph;
        let adj = g.adjacency();
        let mut label = vec![usize::MAX; g.num_vertices()];
        let mut next = 0;
        for s in 0..g.num_vertices() {
            if !d.bn[s] || label[s] != usize::MAX {
                continue;
            }
            label[s] = next;
            let mut stack = vec![s];
            while let Some(u) = stack.pop() {
                for &(w, e) in &adj[u] {
                    if d.be[e] && label[w] == usize::MAX {
                        label[w] = next;
                        stack.push(w);
                    }
                }
            }
            next += 1;
        }
        label
    }

    /// Estimated objective (served weighted load, larger is better) and
    /// the scenarios that balance, or `None` if too few of them do or an
    /// island lacks a grid-former.
    fn score(&self, d: &Design) -> Option<(f64, Vec<bool>)> {
        let g = &self.m.graph;
        let label = self.islands(d);
        let k = label.iter().filter(|&&l| l != usize::MAX).map(|&l| l + 1).max().unwrap_or(0);
        let mut has_gf = vec![false; k];
        for v in 0..g.num_vertices() {
            if label[v] != usize::MAX && g.is_grid_former(v) {
                has_gf[label[v]] = true;
            }
        }
        if has_gf.iter().any(|h| !h) {
            return None;
        }
        let sc = &self.m.scenarios.scenarios;
        let mut ok = vec![false; sc.len()];
        let mut total = 0.0;
        for (a, xi) in sc.iter().enumerate() {
            let mut sums = vec![[0.0; 5]; k];
            for v in 0..g.num_vertices() {
                let l = label[v];
                if l == usize::MAX {
                    continue;
                }
                sums[l][0] += xi.dp[v];
                sums[l][1] += xi.gp[v];
                sums[l][2] += xi.dq[v];
                sums[l][3] += xi.gq[v];
                sums[l][4] += self.w[v] * xi.dp[v];
            }
            let rho = if self.m.deterministic { 1.0 } else { self.rho };
            let balanced = sums.iter().all(|s| rho * s[0] <= s[1] + EPS && rho * s[2] <= s[3] + EPS);
            if balanced {
                ok[a] = true;
                // weighted load, scaled down where generation falls short
                total += sums.iter().map(|s| if s[0] > 0.0 { s[4] * (s[1] / s[0]).min(1.0) } else { 0.0 }).sum::<f64>();
            }
        }
        if ok.iter().filter(|&&b| b).count() < self.need {
            return None;
        }
        Some((total / sc.len() as f64, ok))
    }

    /// Greedy growth from `d`, never energizing a `tabu` bus. Returns every
    /// design passed through, starting with `d`; the last is the best.
    fn grow(&self, mut d: Design, tabu: &[bool]) -> Option<Vec<(f64, Design)>> {
        let mut score = self.score(&d)?.0;
        let mut history = vec![(score, d.clone())];
        let mut best = 0;
        let mut plateau = 0;
        loop {
            let mut pick: Option<(f64, Design)> = None;
            for n in self.moves(&d) {
                if n.bn.iter().zip(tabu).any(|(&b, &t)| b && t) {
                    continue;
                }
                if let Some((s, _)) = self.score(&n) {
                    if pick.as_ref().is_none_or(|(b, _)| s > *b + EPS) {
                        pick = Some((s, n));
                    }
                }
            }
            let Some((s, n)) = pick else { break };
            if s > score + EPS {
                plateau = 0;
            } else {
                plateau += 1;
                if plateau > PLATEAU_STEPS || s < score - EPS {
                    break;
                }
            }
            d = n;
            score = s;
            history.push((s, d.clone()));
            if s > history[best].0 + EPS {
                best = history.len() - 1;
            }
        }
        history.truncate(best + 1);
        Some(history)
    }

    /// Energized buses whose removal leaves the rest a valid forest of
    /// islands: degree at most one among energized lines.
    fn leaves(&self, d: &Design) -> Vec<usize> {
        let g = &self.m.graph;
        let mut deg = vec![0usize; g.num_vertices()];
        for (e, &(i, j)) in g.edges.iter().enumerate() {
            if d.be[e] {
                deg[i] += 1;
                deg[j] += 1;
            }
        }
        (0..g.num_vertices()).filter(|&v| d.bn[v] && deg[v] <= 1).collect()
    }

    /// Designs reachable by energizing one more line: to a new bus, or
    /// between two islands.
    fn moves(&self, d: &Design) -> Vec<Design> {
        let g = &self.m.graph;
        let label = self.islands(d);
        let mut out = Vec::new();
        // a grid-former on its own
        for &v in &g.grid_formers {
            if !d.bn[v] {
                let mut n = d.clone();
                n.bn[v] = true;
                out.push(n);
            }
        }
        for (e, &(i, j)) in g.edges.iter().enumerate() {
            if d.be[e] {
                continue;
            }
            let grow = d.bn[i] != d.bn[j];
            let merge = d.bn[i] && d.bn[j] && label[i] != label[j];
            if grow || merge {
                let mut n = d.clone();
                n.bn[i] = true;
                n.bn[j] = true;
                n.be[e] = true;
                out.push(n);
            }
        }
        out
    }
}

impl OdnpModel {
    /// Greedy island growth. Returns a feasible point of the model, or
    /// `None` when no design better than the all-off one was confirmed.
    pub fn greedy_assignment(&self) -> Option<Assignment> {
        let g = &self.graph;
        let scorer = Scorer {
            m: self,
            w: weights(&self.config, g).ok()?,
            rho: self.config.rho,
            need: if self.deterministic {
                1
            } else {
                self.config.required_retained(self.num_scenarios())
            },
        };
        let empty = Design {
            bn: vec![false; g.num_vertices()],
            be: vec![false; g.num_edges()],
        };
        let no_tabu = vec![false; g.num_vertices()];
        let mut history = scorer.grow(empty, &no_tabu)?;
        // leaf exchange: drop one leaf bus, keep it out, regrow
        let mut best = history.last().cloned()?;
        let mut rounds = 0;
        'improve: while rounds < LOCAL_ROUNDS {
            rounds += 1;
            for v in scorer.leaves(&best.1) {
                let mut d = best.1.clone();
                d.bn[v] = false;
                for (e, &(i, j)) in g.edges.iter().enumerate() {
                    if i == v || j == v {
                        d.be[e] = false;
                    }
                }
                let mut tabu = no_tabu.clone();
                tabu[v] = true;
                if let Some(h) = scorer.grow(d, &tabu) {
                    let last = h.last().cloned().expect("grow keeps its start");
                    if last.0 > best.0 + EPS {
                        best = last;
                        history.extend(h);
                        continue 'improve;
                    }
                }
            }
            break;
        }
        // best designs first; the LP has the final word
        let mut order: Vec<usize> = (0..history.len()).filter(|&h| history[h].1.bn.iter().any(|&b| b)).collect();
        order.sort_by(|&a, &b| history[b].0.total_cmp(&history[a].0).then(b.cmp(&a)));
        for &h in order.iter().take(4) {
            let d = &history[h].1;
            let ok = scorer.score(d)?.1;
            if let Some(a) = self.complete(d, &ok) {
                return Some(a);
            }
        }
        None
    }

    /// Completes a design into a full point: forest, retention flags, and an
    /// LP over the continuous variables.
    fn complete(&self, d: &Design, retained: &[bool]) -> Option<Assignment> {
        let g = &self.graph;
        // spanning forest through the energized lines first
        let mut parent: Vec<usize> = (0..g.num_vertices()).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let mut theta = vec![false; g.num_edges()];
        let order = (0..g.num_edges()).filter(|&e| d.be[e]).chain((0..g.num_edges()).filter(|&e| !d.be[e]));
        for e in order {
            let (i, j) = g.edges[e];
            let (a, b) = (find(&mut parent, i), find(&mut parent, j));
            if a != b {
                parent[a] = b;
                theta[e] = true;
            } else if d.be[e] {
                return None;
            }
        }
        let mut sub = self.model.clone();
        let mut fix = |v: VarId, on: bool| {
            let x = if on { 1.0 } else { 0.0 };
            sub.set_bounds(v, x, x).is_ok()
        };
        let mut ok = true;
        for v in 0..g.num_vertices() {
            ok &= fix(self.design.b_n[v], d.bn[v]);
        }
        for e in 0..g.num_edges() {
            ok &= fix(self.design.b_e[e], d.be[e]);
            ok &= fix(self.design.theta[e], theta[e]);
        }
        for (sv, &r) in self.scenario_vars.iter().zip(retained) {
            if let Some(z) = sv.z {
                ok &= fix(z, r);
            }
        }
        if !ok {
            return None;
        }
        let lp = solve_lp(&sub).ok()?;
        if lp.status != LpStatus::Optimal {
            return None;
        }
        let mut a = Assignment(lp.primal);
        for (j, v) in self.model.variables().iter().enumerate() {
            if v.is_binary() {
                a.0[j] = a.0[j].round();
            }
        }
        match evaluate(&self.model, &a) {
            Ok(e) if e.feasible && e.objective < -EPS => Some(a),
            _ => None,
        }
    }
}
