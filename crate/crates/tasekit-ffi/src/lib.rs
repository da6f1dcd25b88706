//! C ABI over the tasekit library.
//!
//! The surface is deliberately small: build a benchmark case by name, run
//! it with optional overrides, and query the stability helpers that
//! foreign callers most often want (minimum alpha, imaginary-axis peak).
//! Everything crosses the boundary as plain C types; cases travel as
//! opaque handles and every fallible call returns a [`TasekitStatus`].
//!
//! Error details go to a thread-local message retrievable with
//! [`tasekit_last_error`]; the pointer stays valid until the next call on
//! the same thread.
//!
//! The matching header lives at `include/tasekit.h`. It is committed so
//! downstream builds need no Rust tooling; rebuilding with the
//! `generate-header` feature refreshes it via cbindgen when available.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use tasekit::cli::{build_case, resolve_plan, BcMode, RunArgs, SplitMode};
use tasekit::error::TaseError;
use tasekit::problems::{error_report, ProblemCase};
use tasekit::schemes::SchemeInfo;
use tasekit::stability::{self, imag_axis_scan};
use tasekit::tase::alpha_min;

/// Result of every fallible call in this ABI.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TasekitStatus {
    /// The call completed; outputs are valid.
    TasekitOk = 0,
    /// A required pointer argument was null.
    TasekitNullArgument = 1,
    /// The request was malformed: unknown name, bad order, bad sizes.
    TasekitInvalidConfig = 2,
    /// Inputs left the mathematical domain of the operation.
    TasekitDomainError = 3,
    /// A numerical breakdown inside the library (singular solve, panic).
    TasekitNumericalError = 4,
    /// A string argument was not valid UTF-8.
    TasekitUtf8Error = 5,
    /// The caller's output buffer does not match the problem dimension.
    TasekitBadLength = 6,
}

use TasekitStatus::*;

/// Overrides for one integration run. Zero/negative/null fields mean
/// "use the case default" so a zeroed struct runs the calibrated setup.
#[repr(C)]
pub struct TasekitRunOptions {
    /// Scheme name (ERK1-4, SDIRK1-4, CN; RK aliases accepted), or null
    /// for the case's recommended scheme.
    pub scheme: *const c_char,
    /// Stabilizing order p; 0 disables preconditioning, negative keeps
    /// the case default.
    pub tase_p: i32,
    /// Free parameter; non-finite or <= 0 keeps the calibrated value.
    pub alpha: f64,
    /// Step size; non-finite or <= 0 keeps the case default.
    pub dt: f64,
    /// Step count; 0 derives it from the horizon and step size.
    pub n_steps: u64,
    /// 0 = case default, 1 = one preconditioner on the combined operator,
    /// 2 = one per split group.
    pub split: i32,
    /// Nonzero routes boundary sources through the preconditioner with
    /// the operator (the correct treatment); zero adds them outside.
    pub bc_correct: u8,
}

/// Scalar summary of a finished run.
#[repr(C)]
pub struct TasekitRunInfo {
    pub steps_completed: u64,
    /// 1 when the state norm blew past the divergence threshold.
    pub diverged: u8,
    /// Time actually reached (steps times step size).
    pub final_time: f64,
    /// Weighted relative l2 error against the case reference, NaN when
    /// the case has no closed-form solution.
    pub l2_rel: f64,
    /// Relative max-norm error, NaN without a reference.
    pub linf_rel: f64,
}

/// Opaque benchmark-case handle; create with [`tasekit_case_new`], release
/// with [`tasekit_case_free`].
pub struct TasekitCase {
    inner: ProblemCase,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    // Interior NULs cannot reach C; replace rather than fail.
    let clean: String = msg.chars().map(|c| if c == '\0' { ' ' } else { c }).collect();
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(clean).expect("no interior NUL"));
}

fn status_of(err: &TaseError) -> TasekitStatus {
    match err {
        TaseError::InvalidConfig(_) | TaseError::Shape(_) => TasekitInvalidConfig,
        TaseError::Domain(_) => TasekitDomainError,
        _ => TasekitNumericalError,
    }
}

fn fail(err: &TaseError) -> TasekitStatus {
    set_last_error(&err.to_string());
    status_of(err)
}

/// Runs `f` with panics converted to `TasekitNumericalError` so unwinding
/// never crosses the ABI.
fn guarded(f: impl FnOnce() -> TasekitStatus) -> TasekitStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => {
            set_last_error("internal panic");
            TasekitNumericalError
        }
    }
}

/// # Safety
/// `s` must be null or a NUL-terminated C string valid for reads.
unsafe fn opt_str<'a>(s: *const c_char) -> Result<Option<&'a str>, TasekitStatus> {
    if s.is_null() {
        return Ok(None);
    }
    match CStr::from_ptr(s).to_str() {
        Ok(v) => Ok(Some(v)),
        Err(_) => {
            set_last_error("string argument is not valid UTF-8");
            Err(TasekitUtf8Error)
        }
    }
}

/// Message for the most recent failure on this thread, as a NUL-terminated
/// string. Never null; empty when nothing failed yet. The pointer is
/// invalidated by the next failing tasekit call on the same thread.
#[no_mangle]
pub extern "C" fn tasekit_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tasekit_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Builds the named benchmark case. Returns null on failure (unknown name,
/// invalid configuration); the reason is readable via
/// [`tasekit_last_error`].
///
/// # Safety
/// `name` must be a NUL-terminated C string valid for reads.
#[no_mangle]
pub unsafe extern "C" fn tasekit_case_new(name: *const c_char) -> *mut TasekitCase {
    let mut out: *mut TasekitCase = std::ptr::null_mut();
    guarded(|| {
        let name = match opt_str(name) {
            Ok(Some(n)) => n,
            Ok(None) => {
                set_last_error("case name is null");
                return TasekitNullArgument;
            }
            Err(s) => return s,
        };
        match build_case(name) {
            Ok(case) => {
                out = Box::into_raw(Box::new(TasekitCase { inner: case }));
                TasekitOk
            }
            Err(e) => fail(&e),
        }
    });
    out
}

/// Releases a case handle. Null is accepted and ignored.
///
/// # Safety
/// `handle` must be null or a pointer returned by [`tasekit_case_new`]
/// that has not been freed already.
#[no_mangle]
pub unsafe extern "C" fn tasekit_case_free(handle: *mut TasekitCase) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// State-vector length of the case, i.e. the number of entries
/// [`tasekit_case_run`] writes.
///
/// # Safety
/// `handle` must be a live handle from [`tasekit_case_new`]; `out` must
/// be valid for writing one `size_t`.
#[no_mangle]
pub unsafe extern "C" fn tasekit_case_dimension(
    handle: *const TasekitCase,
    out: *mut usize,
) -> TasekitStatus {
    if handle.is_null() || out.is_null() {
        set_last_error("null argument");
        return TasekitNullArgument;
    }
    *out = (*handle).inner.system.dimension;
    TasekitOk
}

/// Integrates the case and writes the final state plus a scalar summary.
///
/// `options` may be null for the fully calibrated default run. `state_out`
/// must hold exactly the case dimension; on divergence the partial state
/// is still written and `info_out.diverged` is set, which is a completed
/// call, not an error.
///
/// # Safety
/// `handle` must be a live handle. `state_out` must be valid for writing
/// `state_len` doubles. `options` and `info_out` must each be null or
/// point to a properly initialized/writable struct of the right type.
#[no_mangle]
pub unsafe extern "C" fn tasekit_case_run(
    handle: *const TasekitCase,
    options: *const TasekitRunOptions,
    state_out: *mut f64,
    state_len: usize,
    info_out: *mut TasekitRunInfo,
) -> TasekitStatus {
    if handle.is_null() || state_out.is_null() {
        set_last_error("null argument");
        return TasekitNullArgument;
    }
    let case = &(*handle).inner;
    if state_len != case.system.dimension {
        set_last_error(&format!(
            "state buffer holds {} entries, case dimension is {}",
            state_len,
            case.system.dimension
        ));
        return TasekitBadLength;
    }

    let scheme = if options.is_null() {
        None
    } else {
        match opt_str((*options).scheme) {
            Ok(v) => v.map(str::to_owned),
            Err(s) => return s,
        }
    };
    let opts = options.as_ref();
    let state = std::slice::from_raw_parts_mut(state_out, state_len);
    let info = info_out.as_mut();

    guarded(|| {
        let args = RunArgs {
            case: case.name.clone(),
            scheme,
            tase: opts.and_then(|o| if o.tase_p < 0 { None } else { Some(o.tase_p as usize) }),
            alpha: opts.and_then(|o| (o.alpha.is_finite() && o.alpha > 0.0).then_some(o.alpha)),
            dt: opts.and_then(|o| (o.dt.is_finite() && o.dt > 0.0).then_some(o.dt)),
            dt_ratio: None,
            steps: opts.and_then(|o| (o.n_steps > 0).then_some(o.n_steps as usize)),
            out: None,
            split_mode: opts.and_then(|o| match o.split {
                1 => Some(SplitMode::Combined),
                2 => Some(SplitMode::Split),
                _ => None,
            }),
            bc_mode: match opts {
                Some(o) if o.bc_correct == 0 => BcMode::Wrong,
                _ => BcMode::Correct,
            },
            seed: 0,
        };
        let resolved = match resolve_plan(case, &args) {
            Ok(r) => r,
            Err(e) => return fail(&e),
        };
        let traj = match case.run(&resolved.plan, resolved.n_steps) {
            Ok(t) => t,
            Err(e) => return fail(&e),
        };
        state.copy_from_slice(traj.final_state());
        if let Some(info) = info {
            info.steps_completed = traj.steps_completed() as u64;
            info.diverged = traj.diverged() as u8;
            info.final_time = traj.final_time();
            info.l2_rel = f64::NAN;
            info.linf_rel = f64::NAN;
            if let Some(exact) = case.exact_at(traj.final_time()) {
                match error_report(traj.final_state(), &exact, Some(&case.norm_weights)) {
                    Ok(rep) => {
                        info.l2_rel = rep.l2_rel;
                        info.linf_rel = rep.linf_rel;
                    }
                    Err(e) => return fail(&e),
                }
            }
        }
        TasekitOk
    })
}

fn scheme_intercept(name: &str) -> Result<(SchemeInfo, f64), TaseError> {
    let info = SchemeInfo::named(name)?;
    let c = info.intercept.ok_or_else(|| {
        TaseError::InvalidConfig(format!(
            "alpha calibration applies to explicit schemes, got {}",
            info.name()
        ))
    })?;
    Ok((info, c))
}

/// Smallest stable alpha for the scheme/order pair, from the calibrated
/// real-axis table.
///
/// # Safety
/// `scheme` must be a NUL-terminated C string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tasekit_alpha_min(
    scheme: *const c_char,
    p: u32,
    out: *mut f64,
) -> TasekitStatus {
    alpha_min_impl(scheme, p, out, false)
}

/// Like [`tasekit_alpha_min`] but built on the scheme's exact real-axis
/// intercept, which certification-grade sweeps need; the table value can
/// sit a hair below the true boundary.
///
/// # Safety
/// `scheme` must be a NUL-terminated C string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tasekit_certified_alpha_min(
    scheme: *const c_char,
    p: u32,
    out: *mut f64,
) -> TasekitStatus {
    alpha_min_impl(scheme, p, out, true)
}

unsafe fn alpha_min_impl(
    scheme: *const c_char,
    p: u32,
    out: *mut f64,
    certified: bool,
) -> TasekitStatus {
    if out.is_null() {
        set_last_error("null output pointer");
        return TasekitNullArgument;
    }
    let name = match opt_str(scheme) {
        Ok(Some(n)) => n.to_owned(),
        Ok(None) => {
            set_last_error("scheme name is null");
            return TasekitNullArgument;
        }
        Err(s) => return s,
    };
    let out = &mut *out;
    guarded(|| {
        if p < 1 || p > 4 {
            set_last_error(&format!("TASE order p must be in 1..4, got {p}"));
            return TasekitInvalidConfig;
        }
        if certified {
            let info = match SchemeInfo::named(&name) {
                Ok(i) => i,
                Err(e) => return fail(&e),
            };
            match stability::certified_alpha_min(&info, p as usize) {
                Ok(a) => {
                    *out = a;
                    TasekitOk
                }
                Err(e) => fail(&e),
            }
        } else {
            match scheme_intercept(&name) {
                Ok((_, c)) => {
                    *out = alpha_min(p as usize, c);
                    TasekitOk
                }
                Err(e) => fail(&e),
            }
        }
    })
}

/// Peak of |sigma| along the imaginary axis for the preconditioned scheme
/// (p = 0 scans the bare scheme), sampled at the origin plus `samples`
/// log-spaced points up to `y_max`.
///
/// # Safety
/// `scheme` must be a NUL-terminated C string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tasekit_imag_axis_max(
    scheme: *const c_char,
    p: u32,
    alpha: f64,
    y_max: f64,
    samples: usize,
    out: *mut f64,
) -> TasekitStatus {
    if out.is_null() {
        set_last_error("null output pointer");
        return TasekitNullArgument;
    }
    let name = match opt_str(scheme) {
        Ok(Some(n)) => n.to_owned(),
        Ok(None) => {
            set_last_error("scheme name is null");
            return TasekitNullArgument;
        }
        Err(s) => return s,
    };
    let out = &mut *out;
    guarded(|| {
        let info = match SchemeInfo::named(&name) {
            Ok(i) => i,
            Err(e) => return fail(&e),
        };
        match imag_axis_scan(&info, p as usize, alpha, y_max, samples) {
            Ok(scan) => {
                *out = scan.max_abs();
                TasekitOk
            }
            Err(e) => fail(&e),
        }
    })
}
