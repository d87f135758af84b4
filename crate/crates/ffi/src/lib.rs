//! C ABI over `xbandit`.
//!
//! Handles are opaque and heap allocated; every `*_new` or `xb_run` output
//! must be released with the matching `*_free`. Fallible calls return an
//! [`XbStatus`] and write their value through an out-pointer. After a
//! failure, [`xb_last_error`] describes it on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use xbandit::algo::{compute_t, confidence_radius};
use xbandit::bounds::{self, BoundParams};
use xbandit::distsim::run_distributed;
use xbandit::objective::{
    GroundTruth, NoiseModel, Objective, ObjectiveId, RewardOracle, Truncation,
};
use xbandit::partition::SmoothnessParams;
use xbandit::serial::run_serial;
use xbandit::{AlgoParams, Error, RunResult, RunStatus};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParams = 2,
    Domain = 3,
    /// Simulation failure: missing entry, divergence or barrier timeout.
    Simulation = 4,
    OutOfRange = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XbObjective {
    DoubleSine = 0,
    Garland = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XbRunner {
    /// Single-process reference implementation.
    Serial = 0,
    /// Lock-step agent simulation over a broadcast bus.
    Distributed = 1,
}

/// One completed level of a run.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XbLevel {
    pub depth: u32,
    pub set_size: u64,
    pub t_h: u64,
    pub best_mean: f64,
    pub expanded: u64,
}

/// Inputs of the bound calculators.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XbBoundParams {
    pub d: f64,
    pub c: f64,
    pub nu1: f64,
    pub rho: f64,
    pub players: u64,
    pub budget: u64,
    pub delta: f64,
}

/// Opaque run configuration.
pub struct XbConfig {
    objective: ObjectiveId,
    params: AlgoParams,
    noise: NoiseModel,
    seed: u64,
}

/// Opaque run outcome.
pub struct XbResult {
    inner: RunResult,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(err: &Error) -> XbStatus {
    match err {
        Error::Domain(_) => XbStatus::Domain,
        Error::InvalidParams(_) | Error::Config(_) => XbStatus::InvalidParams,
        _ => XbStatus::Simulation,
    }
}

/// Runs `f`, converting errors and panics into a status plus last-error text.
fn guard(f: impl FnOnce() -> Result<(), (XbStatus, String)>) -> XbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => XbStatus::Ok,
        Ok(Err((status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic".into());
            XbStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (XbStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (XbStatus, String) {
    (XbStatus::NullPointer, format!("{what} is null"))
}

/// # Safety
/// `p` must be null or valid for the duration of the call.
unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (XbStatus, String)> {
    unsafe { p.as_ref() }.ok_or_else(|| null(what))
}

/// # Safety
/// `p` must be null or valid and unaliased for the duration of the call.
unsafe fn as_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (XbStatus, String)> {
    unsafe { p.as_mut() }.ok_or_else(|| null(what))
}

/// Message describing the last failed call on this thread, or null if none
/// failed yet. Valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn xb_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn xb_status_str(status: XbStatus) -> *const c_char {
    let s: &'static CStr = match status {
        XbStatus::Ok => c"ok",
        XbStatus::NullPointer => c"null pointer argument",
        XbStatus::InvalidParams => c"invalid parameters",
        XbStatus::Domain => c"point outside [0, 1]",
        XbStatus::Simulation => c"simulation failure",
        XbStatus::OutOfRange => c"index out of range",
        XbStatus::Panic => c"internal panic",
    };
    s.as_ptr()
}

/// Creates a configuration with default δ and smoothness constants,
/// Gaussian noise with σ = 0.1, and seed 0.
///
/// # Safety
/// `out` must be a valid pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn xb_config_new(
    objective: XbObjective,
    players: u64,
    budget: u64,
    out: *mut *mut XbConfig,
) -> XbStatus {
    guard(|| {
        let out = unsafe { as_mut(out, "out") }?;
        let params = AlgoParams::new(players as usize, budget);
        params.validate().map_err(lib_err)?;
        let objective = match objective {
            XbObjective::DoubleSine => ObjectiveId::DoubleSine,
            XbObjective::Garland => ObjectiveId::Garland,
        };
        *out = Box::into_raw(Box::new(XbConfig {
            objective,
            params,
            noise: NoiseModel::gaussian(0.1),
            seed: 0,
        }));
        Ok(())
    })
}

/// # Safety
/// `config` must be null or a pointer from [`xb_config_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn xb_config_free(config: *mut XbConfig) {
    if !config.is_null() {
        drop(unsafe { Box::from_raw(config) });
    }
}

/// # Safety
/// `config` must be a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn xb_config_set_delta(config: *mut XbConfig, delta: f64) -> XbStatus {
    guard(|| {
        let cfg = unsafe { as_mut(config, "config") }?;
        let params = cfg.params.with_delta(delta);
        params.validate().map_err(lib_err)?;
        cfg.params = params;
        Ok(())
    })
}

/// # Safety
/// `config` must be a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn xb_config_set_smoothness(
    config: *mut XbConfig,
    nu1: f64,
    rho: f64,
    nu2: f64,
) -> XbStatus {
    guard(|| {
        let cfg = unsafe { as_mut(config, "config") }?;
        let smoothness = SmoothnessParams::new(nu1, rho, nu2).map_err(lib_err)?;
        cfg.params = cfg.params.with_smoothness(smoothness);
        Ok(())
    })
}

/// Noise-free rewards.
///
/// # Safety
/// `config` must be a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn xb_config_set_noise_none(config: *mut XbConfig) -> XbStatus {
    set_noise(config, NoiseModel::None)
}

/// Gaussian noise of standard deviation `sigma`; `reject` redraws out-of-range
/// rewards instead of clamping them.
///
/// # Safety
/// `config` must be a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn xb_config_set_noise_gaussian(
    config: *mut XbConfig,
    sigma: f64,
    reject: bool,
) -> XbStatus {
    let truncation = if reject {
        Truncation::Reject
    } else {
        Truncation::Clamp
    };
    set_noise(config, NoiseModel::TruncatedGaussian { sigma, truncation })
}

/// Uniform noise on `[-halfwidth, halfwidth]`, clamped.
///
/// # Safety
/// `config` must be a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn xb_config_set_noise_uniform(
    config: *mut XbConfig,
    halfwidth: f64,
) -> XbStatus {
    set_noise(config, NoiseModel::Uniform { halfwidth })
}

fn set_noise(config: *mut XbConfig, noise: NoiseModel) -> XbStatus {
    guard(|| {
        let cfg = unsafe { as_mut(config, "config") }?;
        noise.validate().map_err(lib_err)?;
        cfg.noise = noise;
        Ok(())
    })
}

/// # Safety
/// `config` must be a live configuration handle.
#[no_mangle]
pub unsafe extern "C" fn xb_config_set_seed(config: *mut XbConfig, seed: u64) -> XbStatus {
    guard(|| {
        unsafe { as_mut(config, "config") }?.seed = seed;
        Ok(())
    })
}

/// Runs one configuration. Both runners produce identical results.
///
/// # Safety
/// `config` must be a live configuration handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn xb_run(
    config: *const XbConfig,
    runner: XbRunner,
    out: *mut *mut XbResult,
) -> XbStatus {
    guard(|| {
        let cfg = unsafe { as_ref(config, "config") }?;
        let out = unsafe { as_mut(out, "out") }?;
        let truth = GroundTruth::builtin(cfg.objective);
        let objective = Objective::from(cfg.objective);
        let (noise, seed) = (cfg.noise, cfg.seed);
        let oracle_for = |j| RewardOracle::for_player(objective.clone(), noise, seed, j);
        let inner = match runner {
            XbRunner::Serial => run_serial(&cfg.params, oracle_for, &truth),
            XbRunner::Distributed => {
                run_distributed(&cfg.params, oracle_for, &truth).map(|r| r.result)
            }
        }
        .map_err(lib_err)?;
        *out = Box::into_raw(Box::new(XbResult { inner }));
        Ok(())
    })
}

/// # Safety
/// `result` must be null or a pointer from [`xb_run`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn xb_result_free(result: *mut XbResult) {
    if !result.is_null() {
        drop(unsafe { Box::from_raw(result) });
    }
}

fn with_result<T>(result: *const XbResult, f: impl FnOnce(&RunResult) -> T, fallback: T) -> T {
    match unsafe { result.as_ref() } {
        Some(r) => f(&r.inner),
        None => {
            set_last_error("result is null".into());
            fallback
        }
    }
}

/// False if not even the root level fit in the budget.
///
/// # Safety
/// `result` must be a live result handle.
#[no_mangle]
pub unsafe extern "C" fn xb_result_completed(result: *const XbResult) -> bool {
    with_result(result, |r| r.status == RunStatus::Completed, false)
}

/// Output point `x(n)`; NaN for a null handle.
///
/// # Safety
/// `result` must be a live result handle.
#[no_mangle]
pub unsafe extern "C" fn xb_result_x(result: *const XbResult) -> f64 {
    with_result(result, |r| r.x_n, f64::NAN)
}

/// Simple regret `f* - f(x(n))`; NaN for a null handle.
///
/// # Safety
/// `result` must be a live result handle.
#[no_mangle]
pub unsafe extern "C" fn xb_result_loss(result: *const XbResult) -> f64 {
    with_result(result, |r| r.loss, f64::NAN)
}

/// Deepest expanded depth, `-1` if no level completed or the handle is null.
///
/// # Safety
/// `result` must be a live result handle.
#[no_mangle]
pub unsafe extern "C" fn xb_result_h_max(result: *const XbResult) -> i64 {
    with_result(result, |r| r.h_max, -1)
}

/// # Safety
/// `result` must be a live result handle.
#[no_mangle]
pub unsafe extern "C" fn xb_result_rounds(result: *const XbResult) -> u64 {
    with_result(result, |r| r.rounds, 0)
}

/// Values broadcast by each player.
///
/// # Safety
/// `result` must be a live result handle.
#[no_mangle]
pub unsafe extern "C" fn xb_result_messages(result: *const XbResult) -> u64 {
    with_result(result, |r| r.messages, 0)
}

/// # Safety
/// `result` must be a live result handle.
#[no_mangle]
pub unsafe extern "C" fn xb_result_evals_per_player(result: *const XbResult) -> u64 {
    with_result(result, |r| r.evals_per_player, 0)
}

/// # Safety
/// `result` must be a live result handle.
#[no_mangle]
pub unsafe extern "C" fn xb_result_total_pulls(result: *const XbResult) -> u64 {
    with_result(result, |r| r.total_pulls, 0)
}

/// Number of completed levels.
///
/// # Safety
/// `result` must be a live result handle.
#[no_mangle]
pub unsafe extern "C" fn xb_result_level_count(result: *const XbResult) -> u64 {
    with_result(result, |r| r.trajectory.len() as u64, 0)
}

/// # Safety
/// `result` must be a live result handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn xb_result_level(
    result: *const XbResult,
    index: u64,
    out: *mut XbLevel,
) -> XbStatus {
    guard(|| {
        let r = unsafe { as_ref(result, "result") }?;
        let out = unsafe { as_mut(out, "out") }?;
        let levels = &r.inner.trajectory;
        let level = usize::try_from(index)
            .ok()
            .and_then(|i| levels.get(i))
            .ok_or_else(|| {
                (
                    XbStatus::OutOfRange,
                    format!("level {index} of {}", levels.len()),
                )
            })?;
        *out = XbLevel {
            depth: level.depth,
            set_size: level.set_size as u64,
            t_h: level.t_h,
            best_mean: level.best_mean,
            expanded: level.expanded as u64,
        };
        Ok(())
    })
}

/// Per-player pulls of each node at `depth` for a set of `set_size` nodes.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn xb_compute_t(
    depth: u32,
    set_size: u64,
    players: u64,
    delta: f64,
    nu1: f64,
    rho: f64,
    out: *mut u64,
) -> XbStatus {
    guard(|| {
        let out = unsafe { as_mut(out, "out") }?;
        let smoothness = SmoothnessParams::new(nu1, rho, rho * nu1).map_err(lib_err)?;
        let params = AlgoParams::new(players as usize, 1)
            .with_delta(delta)
            .with_smoothness(smoothness);
        params.validate().map_err(lib_err)?;
        if set_size == 0 {
            return Err((XbStatus::InvalidParams, "set_size must be >= 1".into()));
        }
        *out = compute_t(depth, set_size as usize, &params);
        Ok(())
    })
}

/// Radius of the aggregated estimate after `t` pulls per player.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn xb_confidence_radius(
    depth: u32,
    set_size: u64,
    t: u64,
    players: u64,
    delta: f64,
    out: *mut f64,
) -> XbStatus {
    guard(|| {
        let out = unsafe { as_mut(out, "out") }?;
        if set_size == 0 || t == 0 || players == 0 || !(delta > 0.0 && delta < 1.0) {
            return Err((
                XbStatus::InvalidParams,
                "need set_size, t, players >= 1 and 0 < delta < 1".into(),
            ));
        }
        *out = confidence_radius(depth, set_size as usize, t, players as usize, delta);
        Ok(())
    })
}

fn bound_params(p: *const XbBoundParams) -> Result<BoundParams, (XbStatus, String)> {
    let p = unsafe { as_ref(p, "params") }?;
    let bp = BoundParams {
        d: p.d,
        c: p.c,
        nu1: p.nu1,
        rho: p.rho,
        players: p.players as usize,
        budget: p.budget,
        delta: p.delta,
    };
    bp.validate().map_err(lib_err)?;
    Ok(bp)
}

fn bound_call(
    params: *const XbBoundParams,
    out: *mut f64,
    f: impl FnOnce(&BoundParams) -> xbandit::Result<f64>,
) -> XbStatus {
    guard(|| {
        let bp = bound_params(params)?;
        let out = unsafe { as_mut(out, "out") }?;
        *out = f(&bp).map_err(lib_err)?;
        Ok(())
    })
}

/// # Safety
/// `params` must be readable and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn xb_c1_constant(params: *const XbBoundParams, out: *mut f64) -> XbStatus {
    bound_call(params, out, |p| Ok(bounds::c1_constant(p)))
}

/// # Safety
/// `params` must be readable and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn xb_loss_upper_bound(
    params: *const XbBoundParams,
    out: *mut f64,
) -> XbStatus {
    bound_call(params, out, |p| Ok(bounds::loss_upper_bound(p)))
}

/// # Safety
/// `params` must be readable and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn xb_hmax_lower_bound(
    params: *const XbBoundParams,
    out: *mut f64,
) -> XbStatus {
    bound_call(params, out, |p| Ok(bounds::hmax_lower_bound(p)))
}

/// # Safety
/// `params` must be readable and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn xb_rounds_upper_bound(
    params: *const XbBoundParams,
    out: *mut f64,
) -> XbStatus {
    bound_call(params, out, bounds::rounds_upper_bound)
}

/// # Safety
/// `params` must be readable and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn xb_messages_upper_bound(
    params: *const XbBoundParams,
    h_max: u32,
    out: *mut f64,
) -> XbStatus {
    bound_call(params, out, |p| Ok(bounds::messages_upper_bound(p, h_max)))
}
