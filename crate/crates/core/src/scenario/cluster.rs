use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{ScenarioError, ScenarioSet};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Linkage {
    #[default]
    Ward,
    Average,
    Complete,
}

impl FromStr for Linkage {
    type Err = ScenarioError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ward" => Ok(Self::Ward),
            "average" => Ok(Self::Average),
            "complete" => Ok(Self::Complete),
            _ => Err(ScenarioError::Invalid(format!("unknown linkage `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub mean: Vec<f64>,
    /// Unit principal axes, largest variance first.
    pub principal_axes: Vec<Vec<f64>>,
    /// Covariance eigenvalue along each axis.
    pub explained_variance: Vec<f64>,
    pub labels: Vec<usize>,
    pub k: usize,
    /// Set when the features have (numerically) zero variance; the single
    /// axis is then all zeros.
    pub degenerate: bool,
}

impl ClusterModel {
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        self.principal_axes
            .iter()
            .map(|a| a.iter().zip(x).zip(&self.mean).map(|((a, x), m)| a * (x - m)).sum())
            .collect()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut c = vec![0; self.k];
        for &l in &self.labels {
            c[l] += 1;
        }
        c
    }
}

/// Feature vector of each scenario: active demand followed by active
/// generation capacity.
pub fn features(s: &ScenarioSet) -> Vec<Vec<f64>> {
    s.scenarios
        .iter()
        .map(|sc| sc.dp.iter().chain(&sc.gp).copied().collect())
        .collect()
}

/// Principal component projection followed by agglomerative clustering cut
/// at `k` clusters. Labels are numbered by first appearance.
pub fn fit_clusters(s: &ScenarioSet, k: usize, pca_dims: usize, linkage: Linkage) -> Result<ClusterModel, ScenarioError> {
    if k == 0 || k > s.len() {
        return Err(ScenarioError::TooFewScenarios { k, n: s.len() });
    }
    if pca_dims == 0 {
        return Err(ScenarioError::Invalid("pca_dims must be at least 1".into()));
    }
    let x = features(s);
    let (mean, axes, var, degenerate) = pca(&x, pca_dims);
    let proto = ClusterModel {
        mean,
        principal_axes: axes,
        explained_variance: var,
        labels: Vec::new(),
        k,
        degenerate,
    };
    let pts: Vec<Vec<f64>> = x.iter().map(|r| proto.project(r)).collect();
    let merges = match linkage {
        Linkage::Ward => nn_chain(&mut WardState::new(&pts)),
        Linkage::Average | Linkage::Complete => nn_chain(&mut MatrixState::new(&pts, linkage)),
    };
    Ok(ClusterModel {
        labels: cut(pts.len(), merges, k),
        ..proto
    })
}

type Pca = (Vec<f64>, Vec<Vec<f64>>, Vec<f64>, bool);

fn pca(x: &[Vec<f64>], dims: usize) -> Pca {
    let n = x.len();
    let d = x.first().map_or(0, |r| r.len());
    let mut mean = vec![0.0; d];
    for r in x {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let centered = DMatrix::from_fn(n, d, |i, j| x[i][j] - mean[j]);
    let denom = (n.max(2) - 1) as f64;
    let cov = (centered.transpose() * &centered) / denom;
    let total: f64 = cov.diagonal().iter().sum();
    if d == 0 || total <= 1e-14 * (1.0 + mean.iter().map(|m| m * m).sum::<f64>()) {
        return (mean, vec![vec![0.0; d]], vec![0.0], true);
    }
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let dims = dims.min(d);
    let mut axes = Vec::with_capacity(dims);
    let mut var = Vec::with_capacity(dims);
    for &c in order.iter().take(dims) {
        let mut a: Vec<f64> = eig.eigenvectors.column(c).iter().copied().collect();
        // fix the sign so the largest component is positive
        let big = a
            .iter()
            .enumerate()
            .max_by(|p, q| p.1.abs().total_cmp(&q.1.abs()).then(q.0.cmp(&p.0)))
            .map_or(0, |(i, _)| i);
        if a[big] < 0.0 {
            a.iter_mut().for_each(|v| *v = -*v);
        }
        axes.push(a);
        var.push(eig.eigenvalues[c].max(0.0));
    }
    (mean, axes, var, false)
}

/// Cluster dissimilarity bookkeeping for the nearest-neighbor chain.
trait Agglomerate {
    fn len(&self) -> usize;
    fn dist(&self, a: usize, b: usize) -> f64;
    /// Merges `b` into `a`; `b` is retired.
    fn merge(&mut self, a: usize, b: usize, active: &[bool]);
}

struct WardState {
    centroid: Vec<Vec<f64>>,
    size: Vec<f64>,
}

impl WardState {
    fn new(pts: &[Vec<f64>]) -> Self {
        Self {
            centroid: pts.to_vec(),
            size: vec![1.0; pts.len()],
        }
    }
}

impl Agglomerate for WardState {
    fn len(&self) -> usize {
        self.size.len()
    }

    /// Increase in within-cluster sum of squares caused by merging.
    fn dist(&self, a: usize, b: usize) -> f64 {
        let (na, nb) = (self.size[a], self.size[b]);
        let d2: f64 = self.centroid[a]
            .iter()
            .zip(&self.centroid[b])
            .map(|(x, y)| (x - y) * (x - y))
            .sum();
        na * nb / (na + nb) * d2
    }

    fn merge(&mut self, a: usize, b: usize, _active: &[bool]) {
        let (na, nb) = (self.size[a], self.size[b]);
        let cb = std::mem::take(&mut self.centroid[b]);
        for (x, y) in self.centroid[a].iter_mut().zip(&cb) {
            *x = (na * *x + nb * y) / (na + nb);
        }
        self.size[a] = na + nb;
    }
}

/// Condensed distance matrix updated by the Lance-Williams recurrences.
struct MatrixState {
    n: usize,
    d: Vec<f64>,
    size: Vec<f64>,
    linkage: Linkage,
}

impl MatrixState {
    fn new(pts: &[Vec<f64>], linkage: Linkage) -> Self {
        let n = pts.len();
        let mut d = Vec::with_capacity(n * (n.saturating_sub(1)) / 2);
        for i in 0..n {
            for j in i + 1..n {
                let s: f64 = pts[i].iter().zip(&pts[j]).map(|(x, y)| (x - y) * (x - y)).sum();
                d.push(s.sqrt());
            }
        }
        Self {
            n,
            d,
            size: vec![1.0; n],
            linkage,
        }
    }

    fn at(&self, a: usize, b: usize) -> usize {
        let (i, j) = if a < b { (a, b) } else { (b, a) };
        self.n * i - i * (i + 1) / 2 + (j - i - 1)
    }
}

impl Agglomerate for MatrixState {
    fn len(&self) -> usize {
        self.n
    }

    fn dist(&self, a: usize, b: usize) -> f64 {
        self.d[self.at(a, b)]
    }

    fn merge(&mut self, a: usize, b: usize, active: &[bool]) {
        let (na, nb) = (self.size[a], self.size[b]);
        for c in 0..self.n {
            if c == a || c == b || !active[c] {
                continue;
            }
            let (da, db) = (self.dist(a, c), self.dist(b, c));
            let v = match self.linkage {
                Linkage::Complete => da.max(db),
                _ => (na * da + nb * db) / (na + nb),
            };
            let i = self.at(a, c);
            self.d[i] = v;
        }
        self.size[a] = na + nb;
    }
}

/// Nearest-neighbor chain agglomeration. Returns merges `(a, b, height)`
/// in the order performed; valid for reducible linkages (Ward, average,
/// complete).
fn nn_chain(st: &mut impl Agglomerate) -> Vec<(usize, usize, f64)> {
    let n = st.len();
    let mut active = vec![true; n];
    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    let mut chain: Vec<usize> = Vec::new();
    let mut remaining = n;
    while remaining > 1 {
        if chain.is_empty() {
            chain.push(active.iter().position(|&a| a).expect("an active cluster"));
        }
        loop {
            let a = *chain.last().unwrap();
            let prev = chain.len().checked_sub(2).map(|i| chain[i]);
            // prefer the previous chain element on ties so the chain terminates
            let mut best = prev;
            let mut best_d = prev.map_or(f64::INFINITY, |p| st.dist(a, p));
            for c in 0..n {
                if c == a || !active[c] || Some(c) == prev {
                    continue;
                }
                let dc = st.dist(a, c);
                if dc < best_d {
                    best_d = dc;
                    best = Some(c);
                }
            }
            let b = best.expect("another active cluster");
            if Some(b) == prev {
                chain.pop();
                chain.pop();
                let (keep, gone) = (a.min(b), a.max(b));
                st.merge(keep, gone, &active);
                active[gone] = false;
                merges.push((keep, gone, best_d));
                remaining -= 1;
                break;
            }
            chain.push(b);
        }
    }
    merges
}

/// Applies the `n - k` lowest merges and numbers clusters by first member.
fn cut(n: usize, mut merges: Vec<(usize, usize, f64)>, k: usize) -> Vec<usize> {
    merges.sort_by(|x, y| x.2.total_cmp(&y.2));
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    // Merge heights are sorted, but a cluster's identity in `merges` is its
    // representative slot at merge time, which the union-find tracks.
    for &(a, b, _) in merges.iter().take(n - k) {
        let (ra, rb) = (root(&mut parent, a), root(&mut parent, b));
        parent[rb] = ra;
    }
    let mut label = vec![usize::MAX; n];
    let mut next = 0;
    let mut out = vec![0; n];
    for i in 0..n {
        let r = root(&mut parent, i);
        if label[r] == usize::MAX {
            label[r] = next;
            next += 1;
        }
        out[i] = label[r];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::Scenario;

    fn set_from(points: &[Vec<f64>]) -> ScenarioSet {
        let sc = points
            .iter()
            .map(|p| Scenario {
                gp: vec![0.0; p.len()],
                gq: vec![0.0; p.len()],
                dp: p.clone(),
                dq: vec![0.0; p.len()],
            })
            .collect();
        let ids = (0..points[0].len()).map(|i| format!("b{i}")).collect();
        ScenarioSet::new(ids, sc, 0, "t").unwrap()
    }

    #[test]
    fn identical_points_are_degenerate() {
        let s = set_from(&vec![vec![1.0, 2.0]; 5]);
        let m = fit_clusters(&s, 1, 2, Linkage::Ward).unwrap();
        assert!(m.degenerate);
        assert_eq!(m.labels, vec![0; 5]);
    }

    #[test]
    fn rank_one_data() {
        let pts: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, 2.0 * i as f64, 0.5]).collect();
        let m = fit_clusters(&set_from(&pts), 2, 3, Linkage::Ward).unwrap();
        let total: f64 = m.explained_variance.iter().sum();
        assert!(m.explained_variance[0] / total >= 0.99999);
    }

    #[test]
    fn linkages_split_line_into_halves() {
        let mut pts: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64 * 0.1]).collect();
        pts.extend((0..6).map(|i| vec![10.0 + i as f64 * 0.1]));
        for l in [Linkage::Ward, Linkage::Average, Linkage::Complete] {
            let m = fit_clusters(&set_from(&pts), 2, 1, l).unwrap();
            assert_eq!(m.labels, [vec![0; 6], vec![1; 6]].concat(), "{l:?}");
        }
    }

    #[test]
    fn errors() {
        let s = set_from(&[vec![1.0], vec![2.0]]);
        assert!(fit_clusters(&s, 3, 1, Linkage::Ward).is_err());
        assert!(fit_clusters(&s, 1, 0, Linkage::Ward).is_err());
        assert!("single".parse::<Linkage>().is_err());
    }
}
