//! C ABI over `cmc-core`.
//!
//! Objects cross the boundary as opaque handles created by `*_from_json`
//! or `cmc_simulate` and released with the matching `*_free`. Every
//! fallible call returns a status code; on failure the message is
//! available from [`cmc_last_error_message`] on the same thread. States
//! and actions exchanged as arrays are 1-based. Strings returned through
//! out-parameters are owned by the caller and released with
//! [`cmc_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use cmc_core::estimate::{count, estimate_kernel};
use cmc_core::inference::gof_test;
use cmc_core::io::{parse_json, to_json_pretty};
use cmc_core::model::{RewardModel, TargetPolicy, TransitionModel};
use cmc_core::policy::LoggingPolicy;
use cmc_core::rl::evaluate_from_counts;
use cmc_core::simulate::{simulate, uniform_initial, Trajectory};
use cmc_core::special::{chi_square_survival, normal_quantile};
use cmc_core::CmcError;

pub const CMC_OK: i32 = 0;
pub const CMC_INVALID_INPUT: i32 = 2;
pub const CMC_CAPACITY_EXCEEDED: i32 = 3;
pub const CMC_INFERENCE_IMPOSSIBLE: i32 = 4;
pub const CMC_NULL_POINTER: i32 = 5;
pub const CMC_PANIC: i32 = 6;

/// Validated transition kernel.
pub struct CmcModel(TransitionModel);

/// Logging policy.
pub struct CmcPolicy(LoggingPolicy);

/// Logged path of states and actions.
pub struct CmcTrajectory(Trajectory);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

enum Failure {
    Null(&'static str),
    Core(CmcError),
}

impl From<CmcError> for Failure {
    fn from(e: CmcError) -> Self {
        Failure::Core(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> i32 {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CMC_OK,
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            CMC_NULL_POINTER
        }
        Ok(Err(Failure::Core(e))) => {
            set_error(e.to_string());
            e.exit_code() as i32
        }
        Err(_) => {
            set_error("internal panic".into());
            CMC_PANIC
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure::Core(CmcError::InvalidInput(format!("{what} is not UTF-8"))))
}

unsafe fn handle<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn put<T>(out: *mut T, value: T, what: &'static str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, text: String) -> Result<(), Failure> {
    let c = CString::new(text).map_err(|e| Failure::Core(CmcError::InvalidInput(e.to_string())))?;
    put(out, c.into_raw(), "out")
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn cmc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `s` must be NULL or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cmc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses `{"d":..,"k":..,"kernel":[l][s][t]}`.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cmc_model_from_json(json: *const c_char, out: *mut *mut CmcModel) -> i32 {
    guard(|| {
        let model: TransitionModel = parse_json(str_arg(json, "json")?)?;
        put(out, Box::into_raw(Box::new(CmcModel(model))), "out")
    })
}

/// # Safety
/// `model` must be a live handle; `d` and `k` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cmc_model_dims(model: *const CmcModel, d: *mut usize, k: *mut usize) -> i32 {
    guard(|| {
        let m = handle(model, "model")?;
        put(d, m.0.d(), "d")?;
        put(k, m.0.k(), "k")
    })
}

/// # Safety
/// `model` must be NULL or a handle from [`cmc_model_from_json`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cmc_model_free(model: *mut CmcModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Parses a policy object tagged by `"kind"`.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cmc_policy_from_json(json: *const c_char, out: *mut *mut CmcPolicy) -> i32 {
    guard(|| {
        let policy: LoggingPolicy = parse_json(str_arg(json, "json")?)?;
        put(out, Box::into_raw(Box::new(CmcPolicy(policy))), "out")
    })
}

/// # Safety
/// `policy` must be NULL or a handle from [`cmc_policy_from_json`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cmc_policy_free(policy: *mut CmcPolicy) {
    if !policy.is_null() {
        drop(Box::from_raw(policy));
    }
}

/// Simulates `n` steps from a uniform initial state.
///
/// # Safety
/// `model` and `policy` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cmc_simulate(
    model: *const CmcModel,
    policy: *const CmcPolicy,
    n: usize,
    seed: u64,
    out: *mut *mut CmcTrajectory,
) -> i32 {
    guard(|| {
        let m = &handle(model, "model")?.0;
        let p = &handle(policy, "policy")?.0;
        let traj = simulate(m, p, n, &uniform_initial(m.d()), seed)?;
        put(out, Box::into_raw(Box::new(CmcTrajectory(traj))), "out")
    })
}

/// Builds a trajectory from `len` 1-based states and actions.
///
/// # Safety
/// `states` and `actions` must point to `len` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cmc_trajectory_from_arrays(
    states: *const u32,
    actions: *const u32,
    len: usize,
    out: *mut *mut CmcTrajectory,
) -> i32 {
    guard(|| {
        if states.is_null() || actions.is_null() {
            return Err(Failure::Null("states/actions"));
        }
        let to0 = |xs: &[u32], what: &str| -> Result<Vec<usize>, Failure> {
            xs.iter()
                .map(|&x| {
                    x.checked_sub(1)
                        .map(|v| v as usize)
                        .ok_or_else(|| Failure::Core(CmcError::Range(format!("{what} are 1-based"))))
                })
                .collect()
        };
        let s = to0(std::slice::from_raw_parts(states, len), "states")?;
        let a = to0(std::slice::from_raw_parts(actions, len), "actions")?;
        put(out, Box::into_raw(Box::new(CmcTrajectory(Trajectory::new(s, a, 0)?))), "out")
    })
}

/// Number of recorded steps, `n + 1`; 0 for NULL.
///
/// # Safety
/// `traj` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cmc_trajectory_len(traj: *const CmcTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.0.states.len())
}

/// Copies the path into `states` and `actions` (1-based); both must hold
/// at least `capacity` values and `capacity` must cover the whole path.
///
/// # Safety
/// `traj` must be a live handle; the buffers must be writable for `capacity` values.
#[no_mangle]
pub unsafe extern "C" fn cmc_trajectory_copy(
    traj: *const CmcTrajectory,
    states: *mut u32,
    actions: *mut u32,
    capacity: usize,
) -> i32 {
    guard(|| {
        let t = &handle(traj, "trajectory")?.0;
        if states.is_null() || actions.is_null() {
            return Err(Failure::Null("states/actions"));
        }
        let len = t.states.len();
        if capacity < len {
            return Err(CmcError::InvalidInput(format!("buffer holds {capacity} values, path has {len}")).into());
        }
        let (s, a) = (std::slice::from_raw_parts_mut(states, len), std::slice::from_raw_parts_mut(actions, len));
        for i in 0..len {
            s[i] = (t.states[i] + 1) as u32;
            a[i] = (t.actions[i] + 1) as u32;
        }
        Ok(())
    })
}

/// # Safety
/// `traj` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cmc_trajectory_free(traj: *mut CmcTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Count-based estimate for `d` states and `k` actions as JSON.
///
/// # Safety
/// `traj` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cmc_estimate_json(traj: *const CmcTrajectory, d: usize, k: usize, out: *mut *mut c_char) -> i32 {
    guard(|| {
        let t = &handle(traj, "trajectory")?.0;
        put_string(out, to_json_pretty(&estimate_kernel(&count(t, d, k)?))?)
    })
}

/// Pooled chi-square test of the trajectory against `null` at significance `level`.
///
/// # Safety
/// `traj` and `null` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cmc_gof_json(
    traj: *const CmcTrajectory,
    null: *const CmcModel,
    level: f64,
    out: *mut *mut c_char,
) -> i32 {
    guard(|| {
        let t = &handle(traj, "trajectory")?.0;
        let m = &handle(null, "null")?.0;
        put_string(out, to_json_pretty(&gof_test(&count(t, m.d(), m.k())?, m, level)?)?)
    })
}

/// Plug-in evaluation of a target policy; intervals have confidence `1 − level`.
///
/// # Safety
/// `traj` must be a live handle; the JSON arguments NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cmc_eval_json(
    traj: *const CmcTrajectory,
    target_json: *const c_char,
    rewards_json: *const c_char,
    level: f64,
    out: *mut *mut c_char,
) -> i32 {
    guard(|| {
        let t = &handle(traj, "trajectory")?.0;
        let target: TargetPolicy = parse_json(str_arg(target_json, "target_json")?)?;
        let rewards: RewardModel = parse_json(str_arg(rewards_json, "rewards_json")?)?;
        if !(level > 0.0 && level < 1.0) {
            return Err(CmcError::InvalidInput(format!("level {level} outside (0,1)")).into());
        }
        let counts = count(t, target.d(), target.k())?;
        put_string(out, to_json_pretty(&evaluate_from_counts(&counts, &target, &rewards, 1.0 - level)?)?)
    })
}

/// `P(χ²_df > x)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cmc_chi_square_survival(x: f64, df: f64, out: *mut f64) -> i32 {
    guard(|| put(out, chi_square_survival(x, df)?, "out"))
}

/// Standard normal quantile.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cmc_normal_quantile(p: f64, out: *mut f64) -> i32 {
    guard(|| put(out, normal_quantile(p)?, "out"))
}
