//! C interface to `mgpart`.
//!
//! Objects cross the boundary as opaque pointers created by a `*_new`/loader
//! function and released with the matching `*_free`. Every fallible call
//! returns an [`MgStatus`]; on failure a description is kept per thread and
//! read with [`mg_last_error`]. Strings handed out by the library are freed
//! with [`mg_string_free`]. Panics never unwind into C.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::time::Duration;

use mgpart::formulation::{PartitionSolution, SaaConfig};
use mgpart::network::{FeederNetwork, PartitionGraph};
use mgpart::pipeline::{self, Budget, ModelKind, PipelineError};
use mgpart::scenario::{read_csv, read_json, sample_uniform, synthesize, ScenarioSet, SynthConfig};
use mgpart::solver::{BranchingRule, MilpStatus};
use mgpart::validator::upper_bound;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Malformed network, scenarios, solution or option values.
    InvalidInput = 3,
    /// The solver proved there is no feasible partition.
    Infeasible = 4,
    /// Time limit reached before any feasible partition was found.
    TimeLimit = 5,
    /// Solver or re-verification failure.
    SolverError = 6,
    Panic = 7,
}

/// How a solve ended.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MgSolveStatus {
    Optimal = 0,
    /// Stopped by the node budget with a feasible partition.
    Feasible = 1,
    Infeasible = 2,
    TimeLimit = 3,
}

impl From<MilpStatus> for MgSolveStatus {
    fn from(s: MilpStatus) -> Self {
        match s {
            MilpStatus::Optimal => Self::Optimal,
            MilpStatus::Feasible => Self::Feasible,
            MilpStatus::Infeasible => Self::Infeasible,
            MilpStatus::TimeLimit => Self::TimeLimit,
        }
    }
}

/// Options for [`mg_partition`]. Start from [`mg_partition_options_default`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MgPartitionOptions {
    /// Fraction of scenarios the design may fail.
    pub gamma: f64,
    /// Fraction of each energized load that must be served.
    pub rho: f64,
    /// Nonzero: single-scenario model, all energized load served.
    pub deterministic: u8,
    /// Scenarios drawn uniformly from the pool; 0 uses the whole pool.
    pub sample_size: usize,
    pub seed: u64,
    pub gap: f64,
    /// Seconds; 0 or less means no limit.
    pub time_limit: f64,
    /// 0 means no limit.
    pub node_limit: usize,
}

/// Out-of-sample assessment of a solution.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MgAssessment {
    pub q_hat: f64,
    /// Upper confidence bound on the violation probability.
    pub upper: f64,
    /// Minus the mean load served, zero on infeasible draws.
    pub objective: f64,
    pub infeasible: u64,
    pub draws: u64,
}

pub struct MgNetwork(FeederNetwork);
pub struct MgScenarios(ScenarioSet);
pub struct MgSolution {
    sol: PartitionSolution,
    status: MilpStatus,
    bound: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Fail(MgStatus, String);

impl From<PipelineError> for Fail {
    fn from(e: PipelineError) -> Self {
        let code = match &e {
            PipelineError::NoSolution(MilpStatus::Infeasible) => MgStatus::Infeasible,
            PipelineError::NoSolution(MilpStatus::TimeLimit) => MgStatus::TimeLimit,
            PipelineError::Solver(_) | PipelineError::Verification(_) | PipelineError::NoSolution(_) => MgStatus::SolverError,
            _ => MgStatus::InvalidInput,
        };
        Fail(code, e.to_string())
    }
}

fn invalid(e: impl std::fmt::Display) -> Fail {
    Fail(MgStatus::InvalidInput, e.to_string())
}

/// Runs `f`, turning errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> MgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MgStatus::Ok,
        Ok(Err(Fail(code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("internal panic".into());
            MgStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(MgStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail(MgStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| Fail(MgStatus::NullPointer, format!("{what} is null")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| Fail(MgStatus::NullPointer, format!("{what} is null")))
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Message of the last failed call on this thread. Owned by the library and
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn mg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` is null or a string returned by this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn mg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a network from JSON text.
///
/// # Safety
/// `json` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn mg_network_from_json(json: *const c_char, out: *mut *mut MgNetwork) -> MgStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let net = mgpart::network::load_network(str_arg(json, "json")?).map_err(invalid)?;
        *out = boxed(MgNetwork(net));
        Ok(())
    })
}

/// Loads a bundled network: `ieee37`, `feeder13`, `five_bus` or `two_bus`.
///
/// # Safety
/// `name` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn mg_network_builtin(name: *const c_char, out: *mut *mut MgNetwork) -> MgStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let name = str_arg(name, "name")?;
        let net = pipeline::load_network_arg(&format!("builtin:{name}"))?;
        *out = boxed(MgNetwork(net));
        Ok(())
    })
}

/// # Safety
/// `net` is null or from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn mg_network_free(net: *mut MgNetwork) {
    free(net)
}

/// Number of buses, or 0 for a null handle.
///
/// # Safety
/// `net` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mg_network_num_buses(net: *const MgNetwork) -> usize {
    net.as_ref().map_or(0, |n| n.0.buses.len())
}

/// Parses scenarios from CSV text (or JSON when `is_json` is nonzero).
///
/// # Safety
/// `text` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn mg_scenarios_parse(text: *const c_char, is_json: u8, out: *mut *mut MgScenarios) -> MgStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let text = str_arg(text, "text")?;
        let set = if is_json != 0 { read_json(text) } else { read_csv(text) }.map_err(invalid)?;
        *out = boxed(MgScenarios(set));
        Ok(())
    })
}

/// Synthetic hourly profiles for `net`.
///
/// # Safety
/// `net` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn mg_scenarios_synthesize(
    net: *const MgNetwork,
    hours: usize,
    noise: f64,
    seed: u64,
    out: *mut *mut MgScenarios,
) -> MgStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let net = ref_arg(net, "net")?;
        let cfg = SynthConfig {
            hours,
            noise,
            ..SynthConfig::default()
        };
        *out = boxed(MgScenarios(synthesize(&net.0, &cfg, seed).map_err(invalid)?));
        Ok(())
    })
}

/// The network's nominal values as a one-scenario set.
///
/// # Safety
/// `net` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn mg_scenarios_nominal(net: *const MgNetwork, out: *mut *mut MgScenarios) -> MgStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let net = ref_arg(net, "net")?;
        *out = boxed(MgScenarios(ScenarioSet::nominal(&net.0, &PartitionGraph::new(&net.0))));
        Ok(())
    })
}

/// Number of scenarios, or 0 for a null handle.
///
/// # Safety
/// `s` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mg_scenarios_len(s: *const MgScenarios) -> usize {
    s.as_ref().map_or(0, |s| s.0.len())
}

/// # Safety
/// `s` is null or from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn mg_scenarios_free(s: *mut MgScenarios) {
    free(s)
}

#[no_mangle]
pub extern "C" fn mg_partition_options_default() -> MgPartitionOptions {
    MgPartitionOptions {
        gamma: 0.0,
        rho: 1.0,
        deterministic: 0,
        sample_size: 0,
        seed: 0,
        gap: 0.01,
        time_limit: 0.0,
        node_limit: 0,
    }
}

fn partition_impl(net: &FeederNetwork, pool: Option<&ScenarioSet>, o: &MgPartitionOptions) -> Result<MgSolution, Fail> {
    let g = PartitionGraph::new(net);
    let set = match pool {
        None => ScenarioSet::nominal(net, &g),
        Some(p) => {
            let p = p.for_graph(net, &g).map_err(invalid)?;
            if o.sample_size > 0 {
                sample_uniform(&p, o.sample_size, o.seed).map_err(invalid)?
            } else {
                p
            }
        }
    };
    let kind = if o.deterministic != 0 {
        ModelKind::Deterministic
    } else {
        ModelKind::Saa(SaaConfig {
            gamma: o.gamma,
            rho: o.rho,
            weights: None,
        })
    };
    let budget = Budget {
        time_limit: (o.time_limit > 0.0).then(|| Duration::from_secs_f64(o.time_limit)),
        gap: o.gap,
        node_limit: (o.node_limit > 0).then_some(o.node_limit),
        branching: BranchingRule::MostFractional,
    };
    let run = pipeline::partition(net, &set, &kind, &budget, None)?;
    Ok(MgSolution {
        sol: run.solution,
        status: run.result.status,
        bound: run.result.bound,
    })
}

/// Solves for the islands. `scenarios` may be null for the nominal values.
/// `options` may be null for the defaults.
///
/// # Safety
/// Non-null pointers are live handles; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn mg_partition(
    net: *const MgNetwork,
    scenarios: *const MgScenarios,
    options: *const MgPartitionOptions,
    out: *mut *mut MgSolution,
) -> MgStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let net = ref_arg(net, "net")?;
        let o = options.as_ref().copied().unwrap_or_else(|| mg_partition_options_default());
        let sol = partition_impl(&net.0, scenarios.as_ref().map(|s| &s.0), &o)?;
        *out = boxed(sol);
        Ok(())
    })
}

/// Reads a solution written by [`mg_solution_to_json`] or the CLI. Its
/// status reads as optimal and its bound as the recorded objective.
///
/// # Safety
/// `json` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn mg_solution_from_json(json: *const c_char, out: *mut *mut MgSolution) -> MgStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let sol = PartitionSolution::from_json(str_arg(json, "json")?).map_err(invalid)?;
        let bound = sol.objective;
        *out = boxed(MgSolution {
            sol,
            status: MilpStatus::Optimal,
            bound,
        });
        Ok(())
    })
}

/// # Safety
/// `s` is null or from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn mg_solution_free(s: *mut MgSolution) {
    free(s)
}

/// Objective (minus mean load served), NaN for a null handle.
///
/// # Safety
/// `s` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mg_solution_objective(s: *const MgSolution) -> f64 {
    s.as_ref().map_or(f64::NAN, |s| s.sol.objective)
}

/// Proven lower bound on the objective, NaN for a null handle.
///
/// # Safety
/// `s` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mg_solution_bound(s: *const MgSolution) -> f64 {
    s.as_ref().map_or(f64::NAN, |s| s.bound)
}

/// # Safety
/// `s` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn mg_solution_status(s: *const MgSolution, out: *mut MgSolveStatus) -> MgStatus {
    guard(|| {
        let s = ref_arg(s, "solution")?;
        *out_arg(out, "out")? = s.status.into();
        Ok(())
    })
}

/// Number of islands, 0 for a null handle.
///
/// # Safety
/// `s` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mg_solution_num_microgrids(s: *const MgSolution) -> usize {
    s.as_ref().map_or(0, |s| s.sol.microgrids.len())
}

/// The solution as JSON; free the string with [`mg_string_free`].
///
/// # Safety
/// `s` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn mg_solution_to_json(s: *const MgSolution, out: *mut *mut c_char) -> MgStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let s = ref_arg(s, "solution")?;
        *out = CString::new(s.sol.to_json()).map_err(invalid)?.into_raw();
        Ok(())
    })
}

/// Checks the solution on `n_prime` uniform draws from `pool`.
///
/// # Safety
/// Handles are live; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn mg_assess(
    sol: *const MgSolution,
    net: *const MgNetwork,
    pool: *const MgScenarios,
    n_prime: usize,
    beta: f64,
    seed: u64,
    out: *mut MgAssessment,
) -> MgStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let sol = ref_arg(sol, "solution")?;
        let net = ref_arg(net, "net")?;
        let pool = ref_arg(pool, "pool")?;
        let r = pipeline::assess(&sol.sol, &net.0, &pool.0, n_prime, beta, None, seed)?;
        *out = MgAssessment {
            q_hat: r.q_hat,
            upper: r.u,
            objective: r.objective.unwrap_or(f64::NAN),
            infeasible: r.infeasible,
            draws: r.n_prime,
        };
        Ok(())
    })
}

/// One-sided `1 - beta` upper confidence bound for a violation frequency
/// `q_hat` observed on `n_prime` draws.
///
/// # Safety
/// `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn mg_upper_bound(q_hat: f64, n_prime: u64, beta: f64, out: *mut f64) -> MgStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = upper_bound(q_hat, n_prime, beta).map_err(invalid)?;
        Ok(())
    })
}
