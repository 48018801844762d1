//! The `mgpart` binary end to end: exit codes, output files, round trips.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn mgpart(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mgpart")).current_dir(dir).args(args).output().expect("binary runs")
}

fn scratch(tag: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("mgpart-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn missing_network_file_exits_1() {
    let d = scratch("missing");
    let o = mgpart(&d, &["partition", "--network", "nope.json", "--deterministic", "--out", "s.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("nope.json"), "{}", stderr(&o));
    let o = mgpart(&d, &["partition", "--network", "builtin:nowhere", "--deterministic", "--out", "s.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("ieee37"));
}

#[test]
fn sampling_needs_a_sample_size() {
    let d = scratch("no-n");
    let o = mgpart(&d, &["partition", "--network", "builtin:two_bus", "--hours", "24", "--out", "s.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--n"), "{}", stderr(&o));
}

#[test]
fn two_bus_partition_and_check() {
    let d = scratch("two-bus");
    let o = mgpart(&d, &["partition", "--network", "builtin:two_bus", "--deterministic", "--out", "sol.json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let sol = json(&d.join("sol.json"));
    assert!((sol["objective"].as_f64().unwrap() + 0.6).abs() < 1e-9);
    assert_eq!(sol["microgrids"].as_array().unwrap().len(), 1);
    let dot = std::fs::read_to_string(d.join("sol.dot")).unwrap();
    assert!(dot.contains("graph") && dot.contains("\"B\""), "{dot}");

    let o = mgpart(&d, &["check", "--network", "builtin:two_bus", "--solution", "sol.json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["is_forest"], Value::Bool(true));

    // cutting the only line strands the load bus without a grid-former
    let mut broken = sol.clone();
    broken["microgrids"][0]["lines"] = Value::Array(Vec::new());
    std::fs::write(d.join("broken.json"), broken.to_string()).unwrap();
    let o = mgpart(&d, &["check", "--network", "builtin:two_bus", "--solution", "broken.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn mps_round_trip_through_the_builtin_solver() {
    let d = scratch("mps");
    let o = mgpart(&d, &["export-mps", "--network", "builtin:two_bus", "--deterministic", "--out", "m.mps"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = mgpart(&d, &["solve-mps", "m.mps", "m.sol"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let sol = std::fs::read_to_string(d.join("m.sol")).unwrap();
    assert!(sol.starts_with("status optimal\n"), "{sol}");
    let obj: f64 = sol.lines().find_map(|l| l.strip_prefix("objective ")).unwrap().parse().unwrap();
    assert!((obj + 0.6).abs() < 1e-9);
}

#[test]
fn sampled_partition_assess_and_recheck() {
    let d = scratch("sampled");
    let seed = ["--seed", "4"];
    let run = |args: &[&str]| {
        let all: Vec<&str> = seed.iter().chain(args).copied().collect();
        let o = mgpart(&d, &all);
        assert!(o.status.success(), "{args:?}: {}", stderr(&o));
    };
    run(&["synth", "--network", "builtin:five_bus", "--hours", "200", "--out", "pool.json"]);
    run(&["partition", "--network", "builtin:five_bus", "--scenarios", "pool.json", "--n", "8", "--gamma", "0.25", "--out", "sol.json", "--sample-out", "sample.csv"]);
    let sol = json(&d.join("sol.json"));
    let kept = sol["z"].as_array().unwrap().iter().filter(|z| z.as_u64() == Some(1)).count();
    assert!(kept >= 6);
    let o = mgpart(&d, &["check", "--network", "builtin:five_bus", "--solution", "sol.json", "--scenarios", "sample.csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    run(&["assess", "--network", "builtin:five_bus", "--scenarios", "pool.json", "--solution", "sol.json", "--n-prime", "100", "--epsilon", "0.5", "--out", "a.json"]);
    let a = json(&d.join("a.json"));
    let q = a["q_hat"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&q) && a["U"].as_f64().unwrap() >= q);
    assert_eq!(a["n_prime"].as_u64(), Some(100));
    assert!(a["objective"].as_f64().unwrap() <= 0.0);
}

#[test]
fn bernoulli_oracle_needs_no_network() {
    let d = scratch("bernoulli");
    let o = mgpart(&d, &["assess", "--oracle-bernoulli", "0", "--n-prime", "50", "--out", "a.json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let a = json(&d.join("a.json"));
    assert_eq!(a["q_hat"].as_f64(), Some(0.0));
    assert_eq!(a["U"].as_f64(), Some(0.0));
    let o = mgpart(&d, &["assess", "--oracle-bernoulli", "1.5", "--out", "b.json"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn study_writes_one_row_per_cell() {
    let d = scratch("study");
    let o = mgpart(
        &d,
        &["study", "--network", "builtin:five_bus", "--hours", "200", "--kind", "gamma-sweep", "--grid", "0,0.25,0.5", "--repeats", "2", "--n", "4", "--n-prime", "20", "--out", "s.csv"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(d.join("s.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "kind,param,repeat,seed,status,objective,bound,q_hat,U,oos_objective,nodes,lp_iterations");
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r[0] == "gamma_sweep" && r[4] == "optimal"));
    // grid-major order, repeats inside
    let order: Vec<(&str, &str)> = rows.iter().map(|r| (r[1], r[2])).collect();
    assert_eq!(order, [("0.0", "0"), ("0.0", "1"), ("0.25", "0"), ("0.25", "1"), ("0.5", "0"), ("0.5", "1")]);

    let o = mgpart(&d, &["study", "--network", "builtin:five_bus", "--kind", "method-compare", "--grid", "3", "--out", "bad.csv"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn lower_bound_report_fields() {
    let d = scratch("lb");
    let o = mgpart(&d, &["lower-bound", "--network", "builtin:five_bus", "--hours", "200", "--m", "5", "--n", "4", "--out", "lb.json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = json(&d.join("lb.json"));
    let objs: Vec<f64> = r["objectives_sorted"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert_eq!(objs.len(), 5);
    assert!(objs.windows(2).all(|w| w[0] <= w[1]));
    let l = r["L"].as_u64().unwrap() as usize;
    if l > 0 {
        assert_eq!(r["bound"].as_f64(), Some(objs[l - 1]));
    } else {
        assert!(r["bound"].is_null());
    }
}

#[test]
fn reruns_are_byte_identical() {
    let d = scratch("rerun");
    let args = ["--seed", "7", "partition", "--network", "builtin:feeder13", "--hours", "300", "--n", "6", "--gamma", "0.2", "--out"];
    for out in ["a.json", "b.json"] {
        let all: Vec<&str> = args.iter().copied().chain([out]).collect();
        let o = mgpart(&d, &all);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert_eq!(std::fs::read(d.join("a.json")).unwrap(), std::fs::read(d.join("b.json")).unwrap());
    assert_eq!(std::fs::read(d.join("a.dot")).unwrap(), std::fs::read(d.join("b.dot")).unwrap());
}
