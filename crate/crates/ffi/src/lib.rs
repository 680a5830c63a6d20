//! C ABI for the f2m solver.
//!
//! Every fallible call returns an [`F2mStatus`]; on failure the message is
//! available from [`f2m_last_error`] on the same thread until the next call.
//! Instances and results are opaque heap handles released with their
//! matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::io::BufWriter;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use f2m::instance::read_tsplib;
use f2m::pipeline::{full_solve, RunConfig, SolveOutcome};
use f2m::primal::write_solution;
use f2m::{generate_instance, parse_tsplib, write_lp, DistanceMode, EngineConfig, Error, Instance, Point};

pub const F2M_MODE_JACOBI: u32 = 0;
pub const F2M_MODE_GAUSS_SEIDEL: u32 = 1;

pub const F2M_DISTANCE_ROUNDED: u32 = 0;
pub const F2M_DISTANCE_EXACT: u32 = 1;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum F2mStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ParseError = 3,
    IoError = 4,
    /// The graph has a node of degree below 3.
    DegreeError = 5,
    SolveFailed = 6,
    IndexOutOfRange = 7,
    Panic = 8,
}

impl From<&Error> for F2mStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Parse { .. } => F2mStatus::ParseError,
            Error::Io(_) => F2mStatus::IoError,
            Error::Index { .. } => F2mStatus::IndexOutOfRange,
            Error::MinDegree { .. } | Error::Degree { .. } => F2mStatus::DegreeError,
            Error::SolveFailed { .. } | Error::DegenerateExtraction(_) | Error::Infeasible => F2mStatus::SolveFailed,
            Error::Argument(_) | Error::Structure(_) | Error::TooLarge { .. } => F2mStatus::InvalidArgument,
        }
    }
}

/// Solver settings. Start from [`f2m_config_default`] and override fields.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct F2mConfig {
    pub k: usize,
    /// `F2M_MODE_JACOBI` or `F2M_MODE_GAUSS_SEIDEL`.
    pub mode: u32,
    /// Jacobi damping; ignored by Gauss-Seidel.
    pub eta: f64,
    pub eps: f64,
    pub max_sweeps: usize,
    pub tol: f64,
    pub max_restarts: usize,
    pub perturb_scale: f64,
    pub seed: u64,
    pub gap_tol: f64,
    /// Worker threads; 0 uses every core.
    pub threads: usize,
}

pub struct F2mInstance {
    inner: Instance,
}

pub struct F2mResult {
    outcome: SolveOutcome,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(msg));
}

fn clear_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

fn fail(status: F2mStatus, msg: impl Into<String>) -> F2mStatus {
    set_error(msg.into());
    status
}

fn from_error(e: Error) -> F2mStatus {
    fail(F2mStatus::from(&e), e.to_string())
}

/// Runs `body`, mapping panics to `F2mStatus::Panic`.
fn guard(body: impl FnOnce() -> F2mStatus) -> F2mStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(F2mStatus::Panic, msg)
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, F2mStatus> {
    if p.is_null() {
        return Err(fail(F2mStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(F2mStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

fn store_instance(result: f2m::Result<Instance>, out: *mut *mut F2mInstance) -> F2mStatus {
    match result {
        Ok(inner) => {
            unsafe { *out = Box::into_raw(Box::new(F2mInstance { inner })) };
            F2mStatus::Ok
        }
        Err(e) => from_error(e),
    }
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn f2m_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Static, NUL-terminated crate version.
#[no_mangle]
pub extern "C" fn f2m_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn f2m_config_default() -> F2mConfig {
    let run = RunConfig::default();
    F2mConfig {
        k: run.k,
        mode: F2M_MODE_JACOBI,
        eta: run.engine.eta,
        eps: run.engine.eps,
        max_sweeps: run.engine.max_sweeps,
        tol: run.tol,
        max_restarts: run.max_restarts,
        perturb_scale: run.perturb_scale,
        seed: run.seed,
        gap_tol: run.gap_tol,
        threads: 0,
    }
}

/// Parse TSPLIB EUC_2D text.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn f2m_instance_parse(text: *const c_char, out: *mut *mut F2mInstance) -> F2mStatus {
    guard(|| {
        if out.is_null() {
            return fail(F2mStatus::NullPointer, "out is null");
        }
        match str_arg(text, "text") {
            Ok(text) => store_instance(parse_tsplib(text), out),
            Err(status) => status,
        }
    })
}

/// Read a TSPLIB EUC_2D file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn f2m_instance_read(path: *const c_char, out: *mut *mut F2mInstance) -> F2mStatus {
    guard(|| {
        if out.is_null() {
            return fail(F2mStatus::NullPointer, "out is null");
        }
        match str_arg(path, "path") {
            Ok(path) => store_instance(read_tsplib(path), out),
            Err(status) => status,
        }
    })
}

/// `n` points uniform in `[0, box_side]^2` with exact distances.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn f2m_instance_generate(
    n: usize,
    seed: u64,
    box_side: f64,
    out: *mut *mut F2mInstance,
) -> F2mStatus {
    guard(|| {
        if out.is_null() {
            return fail(F2mStatus::NullPointer, "out is null");
        }
        store_instance(generate_instance(n, seed, box_side), out)
    })
}

/// Build an instance from `n` interleaved `x, y` pairs.
///
/// # Safety
/// `xy` must point to `2 * n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn f2m_instance_from_points(
    xy: *const f64,
    n: usize,
    distance: u32,
    out: *mut *mut F2mInstance,
) -> F2mStatus {
    guard(|| {
        if out.is_null() || xy.is_null() {
            return fail(F2mStatus::NullPointer, "xy or out is null");
        }
        let mode = match distance {
            F2M_DISTANCE_ROUNDED => DistanceMode::Euc2dRounded,
            F2M_DISTANCE_EXACT => DistanceMode::Euc2dExact,
            other => return fail(F2mStatus::InvalidArgument, format!("unknown distance mode {other}")),
        };
        let coords = std::slice::from_raw_parts(xy, 2 * n);
        let points = coords.chunks_exact(2).map(|c| Point::new(c[0], c[1])).collect();
        store_instance(Instance::new("points", points, mode), out)
    })
}

/// Number of points, or 0 for null.
///
/// # Safety
/// `instance` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn f2m_instance_len(instance: *const F2mInstance) -> usize {
    instance.as_ref().map_or(0, |i| i.inner.len())
}

/// # Safety
/// `instance` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn f2m_instance_free(instance: *mut F2mInstance) {
    if !instance.is_null() {
        drop(Box::from_raw(instance));
    }
}

fn run_config(cfg: &F2mConfig) -> Result<RunConfig, F2mStatus> {
    let engine = match cfg.mode {
        F2M_MODE_JACOBI => EngineConfig { eta: cfg.eta, ..EngineConfig::jacobi() },
        F2M_MODE_GAUSS_SEIDEL => EngineConfig::gauss_seidel(),
        other => return Err(fail(F2mStatus::InvalidArgument, format!("unknown mode {other}"))),
    };
    Ok(RunConfig {
        k: cfg.k,
        engine: EngineConfig { eps: cfg.eps, max_sweeps: cfg.max_sweeps, ..engine },
        tol: cfg.tol,
        max_restarts: cfg.max_restarts,
        perturb_scale: cfg.perturb_scale,
        seed: cfg.seed,
        gap_tol: cfg.gap_tol,
    })
}

/// Build the k-NN graph, solve, and certify. `config` may be null for defaults.
///
/// # Safety
/// `instance` must be a live handle, `config` null or valid, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn f2m_solve(
    instance: *const F2mInstance,
    config: *const F2mConfig,
    out: *mut *mut F2mResult,
) -> F2mStatus {
    guard(|| {
        let Some(instance) = instance.as_ref() else {
            return fail(F2mStatus::NullPointer, "instance is null");
        };
        if out.is_null() {
            return fail(F2mStatus::NullPointer, "out is null");
        }
        let cfg = config.as_ref().copied().unwrap_or_else(|| f2m_config_default());
        let run = match run_config(&cfg) {
            Ok(run) => run,
            Err(status) => return status,
        };
        let pool = match rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build() {
            Ok(pool) => pool,
            Err(e) => return fail(F2mStatus::InvalidArgument, e.to_string()),
        };
        match pool.install(|| full_solve(&instance.inner, &run)) {
            Ok(outcome) => {
                *out = Box::into_raw(Box::new(F2mResult { outcome }));
                F2mStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `result` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn f2m_result_free(result: *mut F2mResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Primal objective on the true costs; NaN for null.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn f2m_result_objective(result: *const F2mResult) -> f64 {
    result.as_ref().map_or(f64::NAN, |r| r.outcome.solution.objective())
}

/// Dual value at the returned multipliers; NaN for null.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn f2m_result_dual_value(result: *const F2mResult) -> f64 {
    result.as_ref().map_or(f64::NAN, |r| r.outcome.verification.dual_value)
}

/// Primal objective minus dual value; NaN for null.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn f2m_result_gap(result: *const F2mResult) -> f64 {
    result.as_ref().map_or(f64::NAN, |r| r.outcome.verification.duality_gap)
}

/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn f2m_result_sweeps(result: *const F2mResult) -> usize {
    result.as_ref().map_or(0, |r| r.outcome.total_sweeps)
}

/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn f2m_result_restarts(result: *const F2mResult) -> usize {
    result.as_ref().map_or(0, |r| r.outcome.restarts)
}

/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn f2m_result_node_count(result: *const F2mResult) -> usize {
    result.as_ref().map_or(0, |r| r.outcome.graph.node_count())
}

/// Edges of the k-NN graph, including those at value 0.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn f2m_result_edge_count(result: *const F2mResult) -> usize {
    result.as_ref().map_or(0, |r| r.outcome.graph.edge_count())
}

/// Endpoints (u < v), cost and value of graph edge `index`. Any output pointer
/// may be null.
///
/// # Safety
/// `result` must be a live handle; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn f2m_result_edge(
    result: *const F2mResult,
    index: usize,
    u: *mut usize,
    v: *mut usize,
    cost: *mut f64,
    value: *mut f64,
) -> F2mStatus {
    guard(|| {
        let Some(result) = result.as_ref() else {
            return fail(F2mStatus::NullPointer, "result is null");
        };
        let graph = &result.outcome.graph;
        let edge = match graph.edge(index) {
            Ok(edge) => edge,
            Err(e) => return from_error(e),
        };
        if !u.is_null() {
            *u = edge.u;
        }
        if !v.is_null() {
            *v = edge.v;
        }
        if !cost.is_null() {
            *cost = edge.cost;
        }
        if !value.is_null() {
            *value = result.outcome.solution.values()[index];
        }
        F2mStatus::Ok
    })
}

unsafe fn write_to(
    result: *const F2mResult,
    path: *const c_char,
    write: impl FnOnce(&SolveOutcome, BufWriter<File>) -> f2m::Result<()>,
) -> F2mStatus {
    guard(|| {
        let Some(result) = result.as_ref() else {
            return fail(F2mStatus::NullPointer, "result is null");
        };
        let path = match str_arg(path, "path") {
            Ok(path) => path,
            Err(status) => return status,
        };
        let file = match File::create(path) {
            Ok(file) => BufWriter::new(file),
            Err(e) => return from_error(e.into()),
        };
        match write(&result.outcome, file) {
            Ok(()) => F2mStatus::Ok,
            Err(e) => from_error(e),
        }
    })
}

/// Write the `u v value` solution file.
///
/// # Safety
/// `result` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn f2m_result_write_solution(result: *const F2mResult, path: *const c_char) -> F2mStatus {
    write_to(result, path, |o, out| write_solution(&o.graph, &o.solution, o.verification.duality_gap, out))
}

/// Write the relaxation over the solved graph in CPLEX-LP format.
///
/// # Safety
/// `result` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn f2m_result_write_lp(result: *const F2mResult, path: *const c_char) -> F2mStatus {
    write_to(result, path, |o, out| write_lp(&o.graph, out))
}
