//! Branch and bound against exhaustive enumeration of binary assignments.

use mgpart::milp::{evaluate, Assignment, MilpModel, Sense, VarId};
use mgpart::solver::{solve_milp, MilpStatus, NodeOrder, SolveOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn enumerate_best(m: &MilpModel) -> Option<f64> {
    let n = m.num_vars();
    let mut best: Option<f64> = None;
    for mask in 0u32..(1 << n) {
        let a = Assignment((0..n).map(|j| f64::from((mask >> j) & 1)).collect());
        let e = evaluate(m, &a).unwrap();
        if e.feasible && best.is_none_or(|b| e.objective < b) {
            best = Some(e.objective);
        }
    }
    best
}

#[test]
fn knapsack_matches_enumeration() {
    let weights = [23.0, 31.0, 29.0, 44.0, 53.0, 38.0, 63.0, 85.0, 89.0, 82.0];
    let values = [92.0, 57.0, 49.0, 68.0, 60.0, 43.0, 67.0, 84.0, 87.0, 72.0];
    let mut m = MilpModel::new("knapsack");
    let x: Vec<VarId> = (0..10).map(|i| m.add_binary(format!("x{i}")).unwrap()).collect();
    m.add_constraint(
        "capacity",
        x.iter().zip(weights).map(|(&v, w)| (v, w)).collect(),
        Sense::Le,
        165.0,
    )
    .unwrap();
    m.set_objective(x.iter().zip(values).map(|(&v, c)| (v, -c)).collect())
        .unwrap();
    let expected = enumerate_best(&m).unwrap();
    assert_eq!(expected, -309.0);
    for order in [NodeOrder::BestFirst, NodeOrder::DepthFirst] {
        let opt = SolveOptions {
            node_order: order,
            ..SolveOptions::default()
        };
        let r = solve_milp(&m, &opt).unwrap();
        assert_eq!(r.status, MilpStatus::Optimal);
        assert!((r.objective - expected).abs() < 1e-9);
        assert!(evaluate(&m, r.incumbent.as_ref().unwrap()).unwrap().feasible);
        assert!(r.bound <= r.objective + 1e-9);
    }
}

fn random_binary_program(rng: &mut ChaCha8Rng) -> MilpModel {
    let n = rng.random_range(2..=10);
    let mut m = MilpModel::new("rand");
    let x: Vec<VarId> = (0..n).map(|i| m.add_binary(format!("x{i}")).unwrap()).collect();
    for r in 0..rng.random_range(1..=5) {
        let mut terms: Vec<(VarId, f64)> = Vec::new();
        for &v in &x {
            if rng.random_bool(0.7) {
                terms.push((v, rng.random_range(-5..=9) as f64));
            }
        }
        let sense = match rng.random_range(0..4) {
            0 => Sense::Ge,
            1 => Sense::Eq,
            _ => Sense::Le,
        };
        let rhs = rng.random_range(-3..=12) as f64;
        m.add_constraint(format!("r{r}"), terms, sense, rhs).unwrap();
    }
    m.set_objective(x.iter().map(|&v| (v, rng.random_range(-10.0..6.0))).collect())
        .unwrap();
    m
}

#[test]
fn random_binary_programs_match_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(4242);
    let mut feasible = 0;
    for case in 0..150 {
        let m = random_binary_program(&mut rng);
        let expected = enumerate_best(&m);
        let r = solve_milp(&m, &SolveOptions::default()).unwrap();
        match expected {
            None => assert_eq!(r.status, MilpStatus::Infeasible, "case {case}"),
            Some(v) => {
                feasible += 1;
                assert_eq!(r.status, MilpStatus::Optimal, "case {case}");
                assert!((r.objective - v).abs() < 1e-6, "case {case}: {} vs {v}", r.objective);
                assert!(evaluate(&m, r.incumbent.as_ref().unwrap()).unwrap().feasible);
            }
        }
    }
    assert!(feasible > 50);
}

#[test]
fn solves_are_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..10 {
        let m = random_binary_program(&mut rng);
        let a = solve_milp(&m, &SolveOptions::default()).unwrap();
        let b = solve_milp(&m, &SolveOptions::default()).unwrap();
        assert_eq!(a.nodes_explored, b.nodes_explored);
        assert_eq!(a.objective.to_bits(), b.objective.to_bits());
        assert_eq!(a.incumbent.map(|x| x.0), b.incumbent.map(|x| x.0));
    }
}
