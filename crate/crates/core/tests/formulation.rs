//! Model blocks and whole models against enumeration oracles.

mod common;

use std::collections::VecDeque;

use common::{brute_force_deterministic, random_network};
use mgpart::formulation::{
    build_deterministic, build_saa, extract_solution, grid_forming_block, radiality_block, DesignVars, SaaConfig,
};
use mgpart::milp::{evaluate, MilpModel};
use mgpart::network::{fixtures, Bus, FeederNetwork, Line, PartitionGraph};
use mgpart::scenario::{Scenario, ScenarioSet};
use mgpart::solver::{solve_lp, LpStatus, MilpStatus, SolveOptions};
use mgpart::validator::verify;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn exact() -> SolveOptions {
    SolveOptions {
        gap_tolerance: 1e-9,
        ..SolveOptions::default()
    }
}

fn graph(n: usize, edges: &[(usize, usize)], gfs: &[usize]) -> PartitionGraph {
    PartitionGraph::from_edges((0..n).map(|i| format!("v{i}")).collect(), edges.to_vec(), gfs.to_vec())
}

fn fix(m: &mut MilpModel, v: mgpart::milp::VarId, on: bool) {
    let x = if on { 1.0 } else { 0.0 };
    m.set_bounds(v, x, x).unwrap();
}

/// Whether the radiality rows admit the given tree selection.
fn theta_feasible(g: &PartitionGraph, mask: u32) -> bool {
    let mut m = MilpModel::new("tree");
    let d = DesignVars::add(&mut m, g).unwrap();
    radiality_block(&mut m, g, &d).unwrap();
    for e in 0..g.num_edges() {
        fix(&mut m, d.theta[e], mask >> e & 1 == 1);
        fix(&mut m, d.b_e[e], false);
    }
    solve_lp(&m).unwrap().status == LpStatus::Optimal
}

fn is_spanning_tree(n: usize, edges: &[(usize, usize)], mask: u32) -> bool {
    let chosen: Vec<_> = (0..edges.len()).filter(|e| mask >> e & 1 == 1).map(|e| edges[e]).collect();
    if chosen.len() != n - 1 {
        return false;
    }
    let mut seen = vec![false; n];
    let mut q = VecDeque::from([0]);
    seen[0] = true;
    while let Some(u) = q.pop_front() {
        for &(a, b) in &chosen {
            for (x, y) in [(a, b), (b, a)] {
                if x == u && !seen[y] {
                    seen[y] = true;
                    q.push_back(y);
                }
            }
        }
    }
    seen.iter().all(|&s| s)
}

#[test]
fn triangle_tree_has_two_edges() {
    let edges = [(0, 1), (1, 2), (0, 2)];
    let g = graph(3, &edges, &[0]);
    for mask in 0..8u32 {
        assert_eq!(theta_feasible(&g, mask), mask.count_ones() == 2, "mask {mask:03b}");
    }
}

#[test]
fn feasible_tree_selections_are_the_spanning_trees() {
    // 4 vertices, 5 edges: a square with one diagonal has 8 spanning trees
    let edges = [(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)];
    let g = graph(4, &edges, &[0]);
    let mut trees = 0;
    for mask in 0..32u32 {
        let oracle = is_spanning_tree(4, &edges, mask);
        assert_eq!(theta_feasible(&g, mask), oracle, "mask {mask:05b}");
        trees += oracle as usize;
    }
    assert_eq!(trees, 8);
}

#[test]
fn energized_lines_inside_the_tree_only() {
    let edges = [(0, 1), (1, 2), (0, 2)];
    let g = graph(3, &edges, &[0]);
    let mut m = MilpModel::new("tree");
    let d = DesignVars::add(&mut m, &g).unwrap();
    radiality_block(&mut m, &g, &d).unwrap();
    fix(&mut m, d.theta[0], true);
    fix(&mut m, d.theta[1], true);
    fix(&mut m, d.theta[2], false);
    fix(&mut m, d.b_e[2], true);
    assert_eq!(solve_lp(&m).unwrap().status, LpStatus::Infeasible);
}

/// Every energized vertex reaches a grid-former along energized lines.
fn reach_oracle(n: usize, edges: &[(usize, usize)], gfs: &[usize], bn: &[bool], be: &[bool]) -> bool {
    let mut seen = vec![false; n];
    let mut q: VecDeque<usize> = gfs.iter().copied().collect();
    for &v in gfs {
        seen[v] = true;
    }
    while let Some(u) = q.pop_front() {
        for (k, &(a, b)) in edges.iter().enumerate() {
            if !be[k] {
                continue;
            }
            for (x, y) in [(a, b), (b, a)] {
                if x == u && !seen[y] {
                    seen[y] = true;
                    q.push_back(y);
                }
            }
        }
    }
    (0..n).all(|v| !bn[v] || seen[v])
}

#[test]
fn grid_forming_rows_match_reachability() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 8;
    let (mut yes, mut no) = (0, 0);
    for _ in 0..300 {
        let mut edges = Vec::new();
        for k in 1..n {
            let p = rng.random_range(0..k);
            if rng.random_bool(0.8) {
                edges.push((p, k));
            }
        }
        let gfs: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.35)).collect();
        if gfs.is_empty() {
            continue;
        }
        let bn: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
        let be: Vec<bool> = edges.iter().map(|&(a, b)| bn[a] && bn[b] && rng.random_bool(0.9)).collect();
        let g = graph(n, &edges, &gfs);
        let mut m = MilpModel::new("gf");
        let d = DesignVars::add(&mut m, &g).unwrap();
        grid_forming_block(&mut m, &g, &g.grid_formers, &d).unwrap();
        for v in 0..n {
            fix(&mut m, d.b_n[v], bn[v]);
        }
        for e in 0..edges.len() {
            fix(&mut m, d.b_e[e], be[e]);
        }
        let got = solve_lp(&m).unwrap().status == LpStatus::Optimal;
        let want = reach_oracle(n, &edges, &g.grid_formers, &bn, &be);
        assert_eq!(got, want, "edges {edges:?} gfs {gfs:?} bn {bn:?} be {be:?}");
        if want {
            yes += 1
        } else {
            no += 1
        }
    }
    assert!(yes > 20 && no > 20, "{yes} reachable, {no} not");
}

fn two_bus(load: f64) -> FeederNetwork {
    let mut a = Bus::new("A");
    a.grid_forming = true;
    a.gp = 1.0;
    a.gq = 1.0;
    let mut b = Bus::new("B");
    b.dp = load;
    FeederNetwork::new("two", 1.0, "S", vec![Bus::new("S"), a, b], vec![Line::new("S", "A", 0.01, 0.01, 3.0), Line::new("A", "B", 0.01, 0.01, 3.0)])
        .unwrap()
}

fn det_optimum(net: &FeederNetwork) -> f64 {
    let g = PartitionGraph::new(net);
    let m = build_deterministic(net, &ScenarioSet::nominal(net, &g), None).unwrap();
    let r = m.solve(&exact()).unwrap();
    assert_eq!(r.status, MilpStatus::Optimal);
    r.objective
}

#[test]
fn two_bus_optima() {
    assert!((det_optimum(&two_bus(0.6)) + 0.6).abs() < 1e-9);
    assert!(det_optimum(&two_bus(2.0)).abs() < 1e-9);
    assert!(det_optimum(&two_bus(0.0)).abs() < 1e-9);
}

#[test]
fn voltage_drop_follows_the_line() {
    let mut net = two_bus(0.5);
    net.lines[1] = Line::new("A", "B", 0.01, 0.01, 3.0);
    let g = PartitionGraph::new(&net);
    let m = build_deterministic(&net, &ScenarioSet::nominal(&net, &g), None).unwrap();
    let r = m.solve(&exact()).unwrap();
    let x = r.incumbent.unwrap();
    let sv = &m.scenario_vars[0];
    let (a, b) = (g.vertex("A").unwrap(), g.vertex("B").unwrap());
    // P = 0.5 from A to B, Q = 0: drop r * P
    assert!((x.get(sv.v[a]) - x.get(sv.v[b]) - 0.005).abs() < 1e-9);
}

#[test]
fn deterministic_model_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for k in 0..10 {
        let net = random_network(&mut rng, 7, 8);
        let g = PartitionGraph::new(&net);
        let set = ScenarioSet::nominal(&net, &g);
        let oracle = brute_force_deterministic(&net, &set.scenarios[0]);
        let got = det_optimum(&net);
        assert!((got - oracle).abs() < 1e-6, "network {k}: milp {got} oracle {oracle}");
    }
}

#[test]
fn identical_scenarios_collapse_to_the_deterministic_model() {
    let net = fixtures::five_bus();
    let g = PartitionGraph::new(&net);
    let one = ScenarioSet::nominal(&net, &g);
    let mut many = one.clone();
    many.scenarios = vec![one.scenarios[0].clone(); 4];
    let det = det_optimum(&net);
    let saa = build_saa(&net, &many, &SaaConfig::new(0.0)).unwrap().solve(&exact()).unwrap();
    assert!((saa.objective - det).abs() < 1e-7, "{} vs {det}", saa.objective);
    // relaxing the risk level can only help
    let loose = build_saa(&net, &many, &SaaConfig::new(0.5)).unwrap().solve(&exact()).unwrap();
    assert!(loose.objective <= saa.objective + 1e-9);
}

#[test]
fn impossible_scenario_is_dropped() {
    // A (grid-former, 1.0) feeds B and C; the second scenario's loads
    // exceed any island that holds a load
    let mut a = Bus::new("A");
    a.grid_forming = true;
    a.gp = 1.0;
    a.gq = 1.0;
    let mut b = Bus::new("B");
    b.dp = 0.4;
    let mut c = Bus::new("C");
    c.dp = 0.3;
    let net = FeederNetwork::new(
        "three",
        1.0,
        "S",
        vec![Bus::new("S"), a, b, c],
        vec![Line::new("S", "A", 0.01, 0.01, 3.0), Line::new("A", "B", 0.01, 0.01, 3.0), Line::new("B", "C", 0.01, 0.01, 3.0)],
    )
    .unwrap();
    let g = PartitionGraph::new(&net);
    let rich = ScenarioSet::nominal(&net, &g).scenarios[0].clone();
    let mut impossible = rich.clone();
    for v in 0..g.num_vertices() {
        if impossible.dp[v] > 0.0 {
            impossible.dp[v] = 5.0;
        }
    }
    let set = ScenarioSet::new(g.vertices.clone(), vec![rich, impossible], 0, "test").unwrap();
    let m = build_saa(&net, &set, &SaaConfig::new(0.5)).unwrap();
    let r = m.solve(&exact()).unwrap();
    assert!((r.objective + 0.7 / 2.0).abs() < 1e-9, "{}", r.objective);
    let sol = extract_solution(&net, &m, r.incumbent.as_ref().unwrap()).unwrap();
    assert_eq!(sol.z, vec![1, 0]);
    assert_eq!(sol.per_scenario[1].served_p, 0.0);
}

#[test]
fn extracted_islands_hold_grid_formers() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..8 {
        let net = random_network(&mut rng, 8, 9);
        let g = PartitionGraph::new(&net);
        let set = ScenarioSet::nominal(&net, &g);
        let m = build_deterministic(&net, &set, None).unwrap();
        let r = m.solve(&exact()).unwrap();
        let sol = extract_solution(&net, &m, r.incumbent.as_ref().unwrap()).unwrap();
        for mg in &sol.microgrids {
            assert!(!mg.grid_formers.is_empty(), "{mg:?}");
            assert!(mg.grid_formers.iter().all(|b| mg.buses.contains(b)));
        }
        assert!((sol.objective - r.objective).abs() < 1e-9);
        assert!(verify(&sol, &net, &set).unwrap().ok());

        let empty = extract_solution(&net, &m, &m.trivial_assignment()).unwrap();
        assert!(empty.microgrids.is_empty());
        assert!(empty.boundary_lines.is_empty());
    }
}

#[test]
fn greedy_start_is_feasible() {
    let mut nets: Vec<FeederNetwork> = fixtures::NAMES.iter().map(|n| fixtures::by_name(n).unwrap()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    nets.extend((0..5).map(|_| random_network(&mut rng, 8, 9)));
    for net in &nets {
        let g = PartitionGraph::new(net);
        let s = ScenarioSet::nominal(net, &g);
        let m = build_deterministic(net, &s, None).unwrap();
        let a = m.greedy_assignment().unwrap_or_else(|| panic!("no greedy point on {}", net.name));
        let e = evaluate(&m.model, &a).unwrap();
        assert!(e.feasible, "{}: {:?} by {}", net.name, e.worst, e.max_violation);
        let mut three = s.clone();
        let mut low = s.scenarios[0].clone();
        low.dp.iter_mut().for_each(|d| *d *= 0.5);
        let mut high: Scenario = s.scenarios[0].clone();
        high.dp.iter_mut().for_each(|d| *d *= 1.5);
        three.scenarios.extend([low, high]);
        let m = build_saa(net, &three, &SaaConfig::new(0.3)).unwrap();
        match m.greedy_assignment() {
            Some(a) => assert!(evaluate(&m.model, &a).unwrap().feasible, "{} sampled", net.name),
            // allowed only when nothing beats switching everything off
            None => {
                let r = m.solve(&exact()).unwrap();
                assert!(r.objective > -1e-9, "{}: greedy gave up but optimum is {}", net.name, r.objective);
            }
        }
    }
}
