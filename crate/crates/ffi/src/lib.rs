//! C ABI over the walk oracle and the surrogate optimizer.
//!
//! Every fallible function returns a [`QwoptStatus`]; on failure the message
//! is kept per thread and can be read with [`qwopt_last_error`]. Handles are
//! opaque and must be released with their `_free` function. Angles are in
//! radians for the oracle and in the caller's units for the optimizer.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use qwopt::harness::{ProjectionAxis, TargetSpec};
use qwopt::oracle::{NoiseModel, Oracle, OracleConfig};
use qwopt::surrogate::{OptimizerConfig, SurrogateOptimizer};
use qwopt::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QwoptStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ParameterCount = 3,
    Numerical = 4,
    BufferTooSmall = 5,
    Internal = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QwoptAxis {
    Up = 0,
    Down = 1,
    Horizontal = 2,
}

/// Opaque noisy fidelity oracle.
pub struct QwoptOracle {
    inner: Oracle,
}

/// Opaque ask/tell surrogate optimizer.
pub struct QwoptOptimizer {
    inner: SurrogateOptimizer,
    pending: Option<Vec<f64>>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: QwoptStatus, msg: impl Into<String>) -> QwoptStatus {
    set_error(msg);
    status
}

fn from_error(e: Error) -> QwoptStatus {
    let status = match e {
        Error::ParameterCount { .. } | Error::DimensionMismatch { .. } => QwoptStatus::ParameterCount,
        Error::SingularSystem | Error::BandOverflow { .. } | Error::ZeroNorm => QwoptStatus::Numerical,
        Error::Io(_) | Error::LengthMismatch(..) => QwoptStatus::Internal,
        _ => QwoptStatus::InvalidArgument,
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> QwoptStatus) -> QwoptStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => {
            if s == QwoptStatus::Ok {
                LAST_ERROR.with(|e| *e.borrow_mut() = None);
            }
            s
        }
        Err(_) => fail(QwoptStatus::Internal, "panic inside qwopt"),
    }
}

unsafe fn slice<'a>(p: *const f64, len: usize) -> Option<&'a [f64]> {
    if len == 0 {
        Some(&[])
    } else if p.is_null() {
        None
    } else {
        Some(std::slice::from_raw_parts(p, len))
    }
}

/// Number of free angles of a walk with `steps` steps (3·steps − 1; 0 for 0).
#[no_mangle]
pub extern "C" fn qwopt_param_count(steps: usize) -> usize {
    qwopt::walk::param_count(steps)
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn qwopt_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Static name of a status code.
#[no_mangle]
pub extern "C" fn qwopt_status_name(status: QwoptStatus) -> *const c_char {
    let s: &'static CStr = match status {
        QwoptStatus::Ok => c"ok",
        QwoptStatus::NullPointer => c"null pointer",
        QwoptStatus::InvalidArgument => c"invalid argument",
        QwoptStatus::ParameterCount => c"wrong parameter count",
        QwoptStatus::Numerical => c"numerical failure",
        QwoptStatus::BufferTooSmall => c"buffer too small",
        QwoptStatus::Internal => c"internal error",
    };
    s.as_ptr()
}

/// Builds an oracle for `target` (a preset such as `|1>`, `SR_1^-1` or
/// `random:1`). `lambda <= 0` disables shot noise. `seed` drives both the
/// random target and the counts.
///
/// # Safety
/// `target` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qwopt_oracle_new(
    steps: usize,
    target: *const c_char,
    axis: QwoptAxis,
    lambda: f64,
    seed: u64,
    out: *mut *mut QwoptOracle,
) -> QwoptStatus {
    guard(|| {
        if target.is_null() || out.is_null() {
            return fail(QwoptStatus::NullPointer, "target and out must not be NULL");
        }
        *out = ptr::null_mut();
        let Ok(text) = CStr::from_ptr(target).to_str() else {
            return fail(QwoptStatus::InvalidArgument, "target is not UTF-8");
        };
        let spec: TargetSpec = match text.parse() {
            Ok(s) => s,
            Err(e) => return from_error(e),
        };
        let state = match spec.resolve(steps, seed) {
            Ok(s) => s,
            Err(e) => return from_error(e),
        };
        let axis = match axis {
            QwoptAxis::Up => ProjectionAxis::Up,
            QwoptAxis::Down => ProjectionAxis::Down,
            QwoptAxis::Horizontal => ProjectionAxis::Horizontal,
        };
        let mut config = OracleConfig::new(steps, state, seed);
        config.projection_axis = match axis.vector() {
            Ok(v) => v,
            Err(e) => return from_error(e),
        };
        config.noise = if lambda > 0.0 { NoiseModel::poisson(lambda) } else { NoiseModel::noiseless() };
        match Oracle::new(config) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(QwoptOracle { inner }));
                QwoptStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `oracle` must come from [`qwopt_oracle_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qwopt_oracle_free(oracle: *mut QwoptOracle) {
    if !oracle.is_null() {
        drop(Box::from_raw(oracle));
    }
}

/// One noisy cost query `1 − f̂`. Advances the oracle's counter and RNG.
///
/// # Safety
/// `theta` must point to `len` doubles; `oracle` and `cost` must be valid.
#[no_mangle]
pub unsafe extern "C" fn qwopt_oracle_cost(
    oracle: *mut QwoptOracle,
    theta: *const f64,
    len: usize,
    cost: *mut f64,
) -> QwoptStatus {
    guard(|| {
        let (Some(o), Some(t)) = (oracle.as_mut(), slice(theta, len)) else {
            return fail(QwoptStatus::NullPointer, "oracle and theta must not be NULL");
        };
        if cost.is_null() {
            return fail(QwoptStatus::NullPointer, "cost must not be NULL");
        }
        match o.inner.cost(t) {
            Ok(c) => {
                *cost = c;
                QwoptStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Noiseless fidelity of `theta`; does not count as a query.
///
/// # Safety
/// As [`qwopt_oracle_cost`].
#[no_mangle]
pub unsafe extern "C" fn qwopt_oracle_exact_fidelity(
    oracle: *const QwoptOracle,
    theta: *const f64,
    len: usize,
    fidelity: *mut f64,
) -> QwoptStatus {
    guard(|| {
        let (Some(o), Some(t)) = (oracle.as_ref(), slice(theta, len)) else {
            return fail(QwoptStatus::NullPointer, "oracle and theta must not be NULL");
        };
        if fidelity.is_null() {
            return fail(QwoptStatus::NullPointer, "fidelity must not be NULL");
        }
        match o.inner.evaluate_exact(t) {
            Ok(f) => {
                *fidelity = f;
                QwoptStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Cost queries answered so far; 0 for NULL.
///
/// # Safety
/// `oracle` must be NULL or valid.
#[no_mangle]
pub unsafe extern "C" fn qwopt_oracle_evaluations(oracle: *const QwoptOracle) -> u64 {
    oracle.as_ref().map_or(0, |o| o.inner.evaluations())
}

/// Optimizer over the box `[lower[i], upper[i]]`, default settings.
///
/// # Safety
/// `lower` and `upper` must point to `dim` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn qwopt_optimizer_new(
    dim: usize,
    lower: *const f64,
    upper: *const f64,
    budget: usize,
    seed: u64,
    out: *mut *mut QwoptOptimizer,
) -> QwoptStatus {
    guard(|| {
        if out.is_null() {
            return fail(QwoptStatus::NullPointer, "out must not be NULL");
        }
        *out = ptr::null_mut();
        let (Some(lo), Some(hi)) = (slice(lower, dim), slice(upper, dim)) else {
            return fail(QwoptStatus::NullPointer, "bounds must not be NULL");
        };
        if dim == 0 {
            return fail(QwoptStatus::InvalidArgument, "dim must be positive");
        }
        let bounds = lo.iter().copied().zip(hi.iter().copied()).collect();
        match SurrogateOptimizer::new(OptimizerConfig::new(bounds, budget, seed)) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(QwoptOptimizer { inner, pending: None }));
                QwoptStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `optimizer` must come from [`qwopt_optimizer_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qwopt_optimizer_free(optimizer: *mut QwoptOptimizer) {
    if !optimizer.is_null() {
        drop(Box::from_raw(optimizer));
    }
}

/// Writes the next point to evaluate into `point` (`len` ≥ dim). Asking
/// twice without telling returns the same point.
///
/// # Safety
/// `point` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn qwopt_optimizer_ask(
    optimizer: *mut QwoptOptimizer,
    point: *mut f64,
    len: usize,
) -> QwoptStatus {
    guard(|| {
        let Some(o) = optimizer.as_mut() else {
            return fail(QwoptStatus::NullPointer, "optimizer must not be NULL");
        };
        if point.is_null() {
            return fail(QwoptStatus::NullPointer, "point must not be NULL");
        }
        let dim = o.inner.config().dim();
        if len < dim {
            return fail(QwoptStatus::BufferTooSmall, format!("need {dim} doubles, got {len}"));
        }
        let p = o.pending.get_or_insert_with(|| o.inner.ask().point);
        std::slice::from_raw_parts_mut(point, dim).copy_from_slice(p);
        QwoptStatus::Ok
    })
}

/// Reports the cost of the last asked point. `restarted` (may be NULL)
/// is set to 1 when the optimizer discarded its model after a stall.
///
/// # Safety
/// `optimizer` must be valid; `restarted` NULL or valid.
#[no_mangle]
pub unsafe extern "C" fn qwopt_optimizer_tell(
    optimizer: *mut QwoptOptimizer,
    value: f64,
    restarted: *mut i32,
) -> QwoptStatus {
    guard(|| {
        let Some(o) = optimizer.as_mut() else {
            return fail(QwoptStatus::NullPointer, "optimizer must not be NULL");
        };
        if o.pending.take().is_none() {
            return fail(QwoptStatus::InvalidArgument, "tell without a pending ask");
        }
        match o.inner.tell(value) {
            Ok(r) => {
                if !restarted.is_null() {
                    *restarted = r as i32;
                }
                QwoptStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Best point and value told so far. Fails with `InvalidArgument` before
/// the first tell.
///
/// # Safety
/// `point` must point to `len` writable doubles; `value` must be valid.
#[no_mangle]
pub unsafe extern "C" fn qwopt_optimizer_best(
    optimizer: *const QwoptOptimizer,
    point: *mut f64,
    len: usize,
    value: *mut f64,
) -> QwoptStatus {
    guard(|| {
        let Some(o) = optimizer.as_ref() else {
            return fail(QwoptStatus::NullPointer, "optimizer must not be NULL");
        };
        if point.is_null() || value.is_null() {
            return fail(QwoptStatus::NullPointer, "point and value must not be NULL");
        }
        let Some(best) = o.inner.incumbent() else {
            return fail(QwoptStatus::InvalidArgument, "no evaluation told yet");
        };
        if len < best.point.len() {
            return fail(QwoptStatus::BufferTooSmall, format!("need {} doubles", best.point.len()));
        }
        std::slice::from_raw_parts_mut(point, best.point.len()).copy_from_slice(&best.point);
        *value = best.value;
        QwoptStatus::Ok
    })
}
