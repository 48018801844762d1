//! Topology checks against a union-find cycle detector.

use mgpart::network::{reduced_incidence, PartitionGraph};
use proptest::prelude::*;

struct Dsu(Vec<usize>);

impl Dsu {
    fn find(&mut self, x: usize) -> usize {
        let p = self.0[x];
        if p == x {
            return x;
        }
        let r = self.find(p);
        self.0[x] = r;
        r
    }
}

/// True iff the energized edges contain no cycle.
fn acyclic_oracle(n: usize, edges: &[(usize, usize)], on: &[bool]) -> bool {
    let mut d = Dsu((0..n).collect());
    for (k, &(i, j)) in edges.iter().enumerate() {
        if !on[k] {
            continue;
        }
        let (a, b) = (d.find(i), d.find(j));
        if a == b {
            return false;
        }
        d.0[a] = b;
    }
    true
}

fn graph_and_masks() -> impl Strategy<Value = (usize, Vec<(usize, usize)>, Vec<bool>, Vec<bool>)> {
    (2usize..9).prop_flat_map(|n| {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let m = pairs.len();
        (
            Just(n),
            proptest::sample::subsequence(pairs, 0..=m.min(12)),
            proptest::collection::vec(any::<bool>(), n),
        )
            .prop_flat_map(|(n, mut edges, nodes)| {
                let e = edges.len();
                // flip some directions deterministically from the vertex ids
                for (k, p) in edges.iter_mut().enumerate() {
                    if k % 3 == 1 {
                        *p = (p.1, p.0);
                    }
                }
                (Just(n), Just(edges), Just(nodes), proptest::collection::vec(any::<bool>(), e))
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn forest_flag_matches_union_find((n, edges, nodes, on) in graph_and_masks()) {
        let names = (0..n).map(|i| format!("v{i}")).collect();
        let g = PartitionGraph::from_edges(names, edges.clone(), vec![0]);
        let r = g.check_topology(&nodes, &on, &[0]).unwrap();
        prop_assert_eq!(r.is_forest, acyclic_oracle(n, &edges, &on));
        for (k, &(i, j)) in edges.iter().enumerate() {
            let dangling = on[k] && !(nodes[i] && nodes[j]);
            prop_assert_eq!(r.dangling_energized_edges.contains(&k), dangling);
        }
    }

    #[test]
    fn incidence_rows_and_reduction((n, edges, _nodes, _on) in graph_and_masks(), pick in 0usize..8) {
        let names: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
        let g = PartitionGraph::from_edges(names.clone(), edges.clone(), vec![0]);
        let a = g.incidence_matrix();
        let d = a.to_dense();
        prop_assert_eq!(d.len(), edges.len());
        for (k, row) in d.iter().enumerate() {
            prop_assert_eq!(row.iter().filter(|&&x| x == 1.0).count(), 1);
            prop_assert_eq!(row.iter().filter(|&&x| x == -1.0).count(), 1);
            prop_assert_eq!(row[edges[k].0], 1.0);
            prop_assert_eq!(row[edges[k].1], -1.0);
        }
        let r = pick % n;
        let red = reduced_incidence(&a, r).unwrap();
        prop_assert_eq!(red.ncols, n - 1);
        let again = PartitionGraph::from_edges(names, edges, vec![0]);
        prop_assert_eq!(reduced_incidence(&again.incidence_matrix(), r).unwrap(), red);
    }
}
