use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use mgpart_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(mg_last_error()) }.to_string_lossy().into_owned()
}

fn builtin(name: &str) -> *mut MgNetwork {
    let mut net = ptr::null_mut();
    assert_eq!(unsafe { mg_network_builtin(c(name).as_ptr(), &mut net) }, MgStatus::Ok);
    assert!(!net.is_null());
    net
}

fn deterministic() -> MgPartitionOptions {
    MgPartitionOptions {
        deterministic: 1,
        ..mg_partition_options_default()
    }
}

#[test]
fn two_bus_partition_through_the_c_interface() {
    let net = builtin("two_bus");
    let mut sol = ptr::null_mut();
    unsafe {
        assert_eq!(mg_partition(net, ptr::null(), &deterministic(), &mut sol), MgStatus::Ok);
        assert!((mg_solution_objective(sol) + 0.6).abs() < 1e-9);
        assert!((mg_solution_bound(sol) + 0.6).abs() < 1e-6);
        assert_eq!(mg_solution_num_microgrids(sol), 1);
        let mut st = MgSolveStatus::TimeLimit;
        assert_eq!(mg_solution_status(sol, &mut st), MgStatus::Ok);
        assert_eq!(st, MgSolveStatus::Optimal);

        let mut json: *mut c_char = ptr::null_mut();
        assert_eq!(mg_solution_to_json(sol, &mut json), MgStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(mg_solution_from_json(json, &mut back), MgStatus::Ok);
        assert_eq!(mg_solution_objective(back), mg_solution_objective(sol));
        mg_string_free(json);
        mg_solution_free(back);
        mg_solution_free(sol);
        mg_network_free(net);
    }
}

#[test]
fn null_and_malformed_arguments_are_reported() {
    let mut net = ptr::null_mut();
    unsafe {
        assert_eq!(mg_network_from_json(ptr::null(), &mut net), MgStatus::NullPointer);
        assert!(last_error().contains("json"));
        assert_eq!(mg_network_from_json(c("{").as_ptr(), &mut net), MgStatus::InvalidInput);
        assert!(net.is_null());
        assert_eq!(mg_network_builtin(c("atlantis").as_ptr(), &mut net), MgStatus::InvalidInput);
        assert!(last_error().contains("atlantis"));
        let bad = [0xffu8, 0];
        assert_eq!(mg_network_builtin(bad.as_ptr().cast(), &mut net), MgStatus::InvalidUtf8);
        assert_eq!(mg_partition(ptr::null(), ptr::null(), ptr::null(), &mut ptr::null_mut()), MgStatus::NullPointer);
        let mut u = 0.0;
        assert_eq!(mg_upper_bound(1.5, 100, 0.05, &mut u), MgStatus::InvalidInput);
        // null handles in getters are harmless
        assert!(mg_solution_objective(ptr::null()).is_nan());
        assert_eq!(mg_scenarios_len(ptr::null()), 0);
        mg_network_free(ptr::null_mut());
        mg_solution_free(ptr::null_mut());
        mg_string_free(ptr::null_mut());
    }
}

#[test]
fn upper_bound_matches_normal_approximation() {
    let mut u = 0.0;
    assert_eq!(unsafe { mg_upper_bound(0.1, 1000, 0.05, &mut u) }, MgStatus::Ok);
    let expected = 0.1 + 1.6448536269514722 * (0.1f64 * 0.9 / 1000.0).sqrt();
    assert!((u - expected).abs() < 1e-6, "{u} vs {expected}");
}

#[test]
fn sampled_partition_and_assessment() {
    let net = builtin("feeder13");
    let mut pool = ptr::null_mut();
    let mut sol = ptr::null_mut();
    let mut a = MgAssessment::default();
    unsafe {
        assert_eq!(mg_scenarios_synthesize(net, 24 * 28, 0.1, 5, &mut pool), MgStatus::Ok);
        assert_eq!(mg_scenarios_len(pool), 24 * 28);
        let o = MgPartitionOptions {
            gamma: 0.2,
            sample_size: 5,
            seed: 1,
            ..mg_partition_options_default()
        };
        assert_eq!(mg_partition(net, pool, &o, &mut sol), MgStatus::Ok, "{}", last_error());
        assert!(mg_solution_objective(sol) <= 0.0);
        assert_eq!(mg_assess(sol, net, pool, 100, 0.05, 2, &mut a), MgStatus::Ok, "{}", last_error());
        assert_eq!(a.draws, 100);
        assert!((a.q_hat - a.infeasible as f64 / 100.0).abs() < 1e-12);
        assert!(a.upper >= a.q_hat);
        assert!(a.objective <= 0.0);
        mg_solution_free(sol);
        mg_scenarios_free(pool);
        mg_network_free(net);
    }
}

#[test]
fn scenario_text_round_trip() {
    let net = builtin("two_bus");
    let mut nominal = ptr::null_mut();
    let mut parsed = ptr::null_mut();
    unsafe {
        assert_eq!(mg_scenarios_nominal(net, &mut nominal), MgStatus::Ok);
        let two_bus = mgpart::network::fixtures::two_bus();
        let g = mgpart::network::PartitionGraph::new(&two_bus);
        let text = mgpart::scenario::write_csv(&mgpart::scenario::ScenarioSet::nominal(&two_bus, &g));
        assert_eq!(mg_scenarios_parse(c(&text).as_ptr(), 0, &mut parsed), MgStatus::Ok);
        assert_eq!(mg_scenarios_len(parsed), mg_scenarios_len(nominal));
        mg_scenarios_free(parsed);
        assert_eq!(mg_scenarios_parse(c("not,a\nscenario").as_ptr(), 0, &mut parsed), MgStatus::InvalidInput);
        mg_scenarios_free(nominal);
        mg_network_free(net);
    }
}

/// `cargo test` only builds the rlib, so the static library is built here,
/// in a target directory of its own to stay clear of the outer build lock.
fn static_lib() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    let dir = exe.parent().unwrap().parent().unwrap().parent().unwrap().join("ffi-link-test");
    let cargo = std::env::var("CARGO").unwrap_or_else(|_| "cargo".into());
    let st = Command::new(cargo)
        .args(["build", "--quiet", "-p", "mgpart-ffi", "--lib"])
        .args(["--config", "profile.dev.opt-level=0", "--config", "profile.dev.debug=0", "--target-dir"])
        .arg(&dir)
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .status()
        .expect("cargo runs");
    assert!(st.success(), "building the static library failed");
    dir.join("debug/libmgpart_ffi.a")
}

#[test]
fn header_compiles_and_links_from_c() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let lib = static_lib();
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let out = tempfile_path("mgpart_smoke");
    let cc = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Wextra", "-Werror", "-I"])
        .arg(root.join("include"))
        .arg(root.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&out)
        .output()
        .expect("a C compiler on PATH");
    assert!(cc.status.success(), "{}", String::from_utf8_lossy(&cc.stderr));
    let run = Command::new(&out).output().unwrap();
    let _ = std::fs::remove_file(&out);
    assert!(run.status.success(), "exit {:?}: {}", run.status.code(), String::from_utf8_lossy(&run.stderr));
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("ok "));
}

fn tempfile_path(stem: &str) -> PathBuf {
    std::env::temp_dir().join(format!("{stem}_{}", std::process::id()))
}
