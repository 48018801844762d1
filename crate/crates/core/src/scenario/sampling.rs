use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ClusterModel, ScenarioError, ScenarioSet};

/// `n` indices drawn uniformly with replacement from `0..len`.
pub fn uniform_indices(len: usize, n: usize, seed: u64) -> Result<Vec<usize>, ScenarioError> {
    if n == 0 {
        return Ok(Vec::new());
    }
    if len == 0 {
        return Err(ScenarioError::EmptySource(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n).map(|_| rng.random_range(0..len)).collect())
}

pub fn sample_uniform(s: &ScenarioSet, n: usize, seed: u64) -> Result<ScenarioSet, ScenarioError> {
    let idx = uniform_indices(s.len(), n, seed)?;
    Ok(s.subset(&idx, seed, format!("uniform(n={n}, seed={seed}) of [{}]", s.provenance)))
}

/// `n / k` draws with replacement from each cluster, grouped by cluster.
pub fn stratified_indices(m: &ClusterModel, n: usize, seed: u64) -> Result<Vec<usize>, ScenarioError> {
    if n % m.k != 0 {
        return Err(ScenarioError::NotMultiple { n, k: m.k });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut members = vec![Vec::new(); m.k];
    for (i, &l) in m.labels.iter().enumerate() {
        members[l].push(i);
    }
    if let Some(c) = members.iter().position(|v| v.is_empty()) {
        return Err(ScenarioError::EmptyCluster(c));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let per = n / m.k;
    let mut out = Vec::with_capacity(n);
    for c in &members {
        for _ in 0..per {
            out.push(c[rng.random_range(0..c.len())]);
        }
    }
    Ok(out)
}

pub fn sample_stratified(s: &ScenarioSet, m: &ClusterModel, n: usize, seed: u64) -> Result<ScenarioSet, ScenarioError> {
    if m.labels.len() != s.len() {
        return Err(ScenarioError::Mismatch(format!(
            "cluster model labels {} scenarios, set has {}",
            m.labels.len(),
            s.len()
        )));
    }
    let idx = stratified_indices(m, n, seed)?;
    Ok(s.subset(&idx, seed, format!("stratified(n={n}, k={}, seed={seed}) of [{}]", m.k, s.provenance)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::Scenario;

    fn set(n: usize) -> ScenarioSet {
        let sc = (0..n)
            .map(|i| Scenario {
                gp: vec![0.0],
                gq: vec![0.0],
                dp: vec![i as f64],
                dq: vec![0.0],
            })
            .collect();
        ScenarioSet::new(vec!["a".into()], sc, 0, "t").unwrap()
    }

    fn model(labels: Vec<usize>, k: usize) -> ClusterModel {
        ClusterModel {
            mean: vec![],
            principal_axes: vec![],
            explained_variance: vec![],
            labels,
            k,
            degenerate: false,
        }
    }

    #[test]
    fn uniform_edge_cases() {
        assert!(sample_uniform(&set(3), 0, 1).unwrap().is_empty());
        let one = sample_uniform(&set(1), 5, 1).unwrap();
        assert_eq!(one.len(), 5);
        assert!(one.scenarios.iter().all(|s| s.dp[0] == 0.0));
        assert_eq!(sample_uniform(&set(0), 2, 1), Err(ScenarioError::EmptySource(2)));
        assert_eq!(sample_uniform(&set(9), 7, 3), sample_uniform(&set(9), 7, 3));
    }

    #[test]
    fn stratified_counts() {
        let s = set(2);
        let m = model(vec![0, 1], 2);
        let out = sample_stratified(&s, &m, 4, 9).unwrap();
        let dp: Vec<f64> = out.scenarios.iter().map(|s| s.dp[0]).collect();
        assert_eq!(dp, vec![0.0, 0.0, 1.0, 1.0]);
        assert!(sample_stratified(&s, &m, 0, 9).unwrap().is_empty());
        assert_eq!(sample_stratified(&s, &m, 3, 9), Err(ScenarioError::NotMultiple { n: 3, k: 2 }));
        let gap = model(vec![0, 0], 2);
        assert_eq!(sample_stratified(&s, &gap, 2, 9), Err(ScenarioError::EmptyCluster(1)));
    }
}
