//! Scenario synthesis and sampling against independent statistical checks.

use mgpart::network::fixtures;
use mgpart::scenario::{
    fit_clusters, read_csv, sample_stratified, sample_uniform, synthesize, uniform_indices, write_csv, Linkage, Scenario,
    ScenarioSet, SynthConfig,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Quantile by order-statistic selection and interpolation between the two
/// neighbouring ranks.
fn q75(series: &[f64]) -> f64 {
    let mut v = series.to_vec();
    let h = 0.75 * (v.len() as f64 - 1.0);
    let k = h as usize;
    let (_, lo, rest) = v.select_nth_unstable_by(k, |a, b| a.partial_cmp(b).unwrap());
    let lo = *lo;
    let hi = rest.iter().cloned().fold(f64::INFINITY, f64::min);
    if h == k as f64 || rest.is_empty() {
        lo
    } else {
        lo + (h - k as f64) * (hi - lo)
    }
}

#[test]
fn full_year_scaling_rules() {
    let net = fixtures::ieee37();
    let s = synthesize(&net, &SynthConfig::default(), 11).unwrap();
    assert_eq!(s.len(), 8760);
    for (v, id) in s.bus_ids.iter().enumerate() {
        let bus = net.bus(id).unwrap();
        let dp: Vec<f64> = s.scenarios.iter().map(|x| x.dp[v]).collect();
        let gp: Vec<f64> = s.scenarios.iter().map(|x| x.gp[v]).collect();
        assert!(dp.iter().chain(&gp).all(|&x| x >= 0.0));
        if bus.dp == 0.0 {
            assert!(dp.iter().all(|&x| x == 0.0), "{id}");
        } else {
            assert!((q75(&dp) - bus.dp).abs() <= 1e-9, "{id}: {} vs {}", q75(&dp), bus.dp);
        }
        if bus.gp > 0.0 && !bus.grid_forming {
            let peak = gp.iter().cloned().fold(0.0, f64::max);
            assert!((peak - bus.gp).abs() <= 1e-12, "{id}");
            // night hours carry no solar output
            assert!(s.scenarios.iter().step_by(24).all(|x| x.gp[v] == 0.0));
        }
    }
    let again = synthesize(&net, &SynthConfig::default(), 11).unwrap();
    assert_eq!(write_csv(&s), write_csv(&again));
}

#[test]
fn uniform_draws_pass_chi_square() {
    let idx = uniform_indices(10, 100_000, 2024).unwrap();
    let mut counts = [0f64; 10];
    for i in idx {
        counts[i] += 1.0;
    }
    let expected = 10_000.0;
    let stat: f64 = counts.iter().map(|c| (c - expected).powi(2) / expected).sum();
    let p = 1.0 - ChiSquared::new(9.0).unwrap().cdf(stat);
    assert!(p > 0.01, "chi-square {stat}, p = {p}");
}

fn cloud_set(rng: &mut ChaCha8Rng, centers: &[[f64; 3]], per: usize) -> (ScenarioSet, Vec<usize>) {
    let mut sc = Vec::new();
    let mut truth = Vec::new();
    for _ in 0..per {
        for (c, ctr) in centers.iter().enumerate() {
            let dp: Vec<f64> = ctr.iter().map(|m| m + 0.05 * rng.sample::<f64, _>(StandardNormal)).collect();
            sc.push(Scenario {
                gp: vec![0.0; 3],
                gq: vec![0.0; 3],
                dp: dp.iter().map(|x| x.max(0.0)).collect(),
                dq: vec![0.0; 3],
            });
            truth.push(c);
        }
    }
    (ScenarioSet::new(vec!["a".into(), "b".into(), "c".into()], sc, 0, "clouds").unwrap(), truth)
}

#[test]
fn separated_clouds_match_nearest_centroid() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let centers = [[1.0, 1.0, 1.0], [4.0, 2.0, 3.0]];
    let (s, _) = cloud_set(&mut rng, &centers, 40);
    for linkage in [Linkage::Ward, Linkage::Average, Linkage::Complete] {
        let m = fit_clusters(&s, 2, 2, linkage).unwrap();
        // oracle: assign each point to the nearer generating center
        let oracle: Vec<usize> = s
            .scenarios
            .iter()
            .map(|x| {
                let d = |c: &[f64; 3]| c.iter().zip(&x.dp).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
                usize::from(d(&centers[1]) < d(&centers[0]))
            })
            .collect();
        let same = m.labels.iter().zip(&oracle).all(|(a, b)| a == b);
        let swapped = m.labels.iter().zip(&oracle).all(|(a, b)| *a == 1 - b);
        assert!(same || swapped, "{linkage:?}");
    }
}

#[test]
fn stratified_histogram_is_uniform() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let centers = [[0.5, 0.5, 0.5], [3.0, 0.5, 0.5], [0.5, 3.0, 0.5], [0.5, 0.5, 3.0], [3.0, 3.0, 3.0]];
    let (s, _) = cloud_set(&mut rng, &centers, 12);
    let m = fit_clusters(&s, 5, 2, Linkage::Ward).unwrap();
    assert_eq!(m.cluster_sizes(), vec![12; 5]);
    let idx = mgpart::scenario::stratified_indices(&m, 20, 4).unwrap();
    let mut hist = [0; 5];
    for i in idx {
        hist[m.labels[i]] += 1;
    }
    assert_eq!(hist, [4; 5]);
    let out = sample_stratified(&s, &m, 20, 4).unwrap();
    assert_eq!(out.len(), 20);
    assert_eq!(out.bus_ids, s.bus_ids);
}

#[test]
fn clustering_a_full_year_is_tractable() {
    let net = fixtures::ieee37();
    let s = synthesize(&net, &SynthConfig::default(), 1).unwrap();
    let t = std::time::Instant::now();
    let m = fit_clusters(&s, 10, 2, Linkage::Ward).unwrap();
    assert!(t.elapsed().as_secs() < 60);
    assert!(m.cluster_sizes().iter().all(|&c| c > 0));
    let sample = sample_stratified(&s, &m, 20, 5).unwrap();
    assert_eq!(sample.len(), 20);
}

#[test]
fn csv_round_trip_of_synthesized_set() {
    let net = fixtures::ieee37();
    let cfg = SynthConfig { hours: 48, ..SynthConfig::default() };
    let s = synthesize(&net, &cfg, 2).unwrap();
    let back = read_csv(&write_csv(&s)).unwrap();
    assert_eq!(back.scenarios, s.scenarios);
}

fn random_set() -> impl Strategy<Value = ScenarioSet> {
    (2usize..6, 4usize..30, any::<u64>()).prop_map(|(d, n, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sc = (0..n)
            .map(|_| Scenario {
                gp: (0..d).map(|_| rng.random_range(0.0..1.0)).collect(),
                gq: vec![0.0; d],
                dp: (0..d).map(|_| rng.random_range(0.0..2.0)).collect(),
                dq: vec![0.0; d],
            })
            .collect();
        ScenarioSet::new((0..d).map(|i| i.to_string()).collect(), sc, seed, "p").unwrap()
    })
}

fn reconstruction_error(s: &ScenarioSet, dims: usize) -> f64 {
    let m = fit_clusters(s, 1, dims, Linkage::Ward).unwrap();
    s.scenarios
        .iter()
        .map(|sc| {
            let x: Vec<f64> = sc.dp.iter().chain(&sc.gp).copied().collect();
            let z = m.project(&x);
            let mut r: Vec<f64> = m.mean.clone();
            for (a, zi) in m.principal_axes.iter().zip(&z) {
                for (ri, ai) in r.iter_mut().zip(a) {
                    *ri += zi * ai;
                }
            }
            r.iter().zip(&x).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
        })
        .sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn principal_axes_are_orthonormal(s in random_set(), dims in 1usize..6) {
        let m = fit_clusters(&s, 2, dims, Linkage::Ward).unwrap();
        for (i, a) in m.principal_axes.iter().enumerate() {
            for (j, b) in m.principal_axes.iter().enumerate() {
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((dot - want).abs() <= 1e-8);
            }
        }
        prop_assert!(m.labels.iter().all(|&l| l < 2));
    }

    #[test]
    fn reconstruction_error_non_increasing(s in random_set()) {
        let d = 2 * s.bus_ids.len();
        let errs: Vec<f64> = (1..=d).map(|k| reconstruction_error(&s, k)).collect();
        for w in errs.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-9 * (1.0 + w[0]));
        }
        prop_assert!(errs[d - 1] <= 1e-9);
    }

    #[test]
    fn samples_preserve_shape(s in random_set(), n in 0usize..40, seed in any::<u64>()) {
        let out = sample_uniform(&s, n, seed).unwrap();
        prop_assert_eq!(out.len(), n);
        for sc in &out.scenarios {
            prop_assert_eq!(sc.len(), s.bus_ids.len());
            prop_assert!(sc.dp.iter().chain(&sc.gp).all(|&x| x >= 0.0));
        }
    }
}
