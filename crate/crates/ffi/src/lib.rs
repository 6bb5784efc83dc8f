//! C ABI over the gradsync simulator.
//!
//! Runs are opaque [`GsRun`] handles. Every fallible call returns a
//! [`GsStatus`]; on failure, `gs_last_error` describes the most recent error
//! on the calling thread. Strings handed out by the library must be released
//! with `gs_string_free`, handles with `gs_run_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use gradsync::cli::{config_from_json, execute, RunOutput};
use gradsync::engine::{validate, wait_chain_length, PresetSpec};
use gradsync::metrics::{write_summary_json, write_trace_csv};
use gradsync::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GsStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidConfig = 3,
    Io = 4,
    Internal = 5,
}

/// A completed simulation with its analysis.
pub struct GsRun {
    output: RunOutput,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: GsStatus, msg: impl Into<String>) -> GsStatus {
    set_error(msg);
    status
}

fn from_error(e: Error) -> GsStatus {
    let status = match e {
        Error::Io(_) => GsStatus::Io,
        _ => GsStatus::InvalidConfig,
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> GsStatus) -> GsStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(GsStatus::Internal, "internal panic"))
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, GsStatus> {
    if s.is_null() {
        return Err(fail(GsStatus::NullArgument, "null string argument"));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| fail(GsStatus::InvalidUtf8, "string argument is not UTF-8"))
}

unsafe fn hand_out(text: String, out: *mut *mut c_char) -> GsStatus {
    match CString::new(text) {
        Ok(c) => {
            *out = c.into_raw();
            GsStatus::Ok
        }
        Err(_) => fail(GsStatus::Internal, "output contains a NUL byte"),
    }
}

unsafe fn run_ref<'a>(run: *const GsRun) -> Result<&'a GsRun, GsStatus> {
    run.as_ref()
        .ok_or_else(|| fail(GsStatus::NullArgument, "null run handle"))
}

macro_rules! try_status {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(status) => return status,
        }
    };
}

/// Validates and runs a configuration given as JSON: a run config, a preset
/// spec such as `{"preset": "wait_chain", "size": 8}`, or a summary from an
/// earlier run. On success `*out` receives a handle to free with
/// `gs_run_free`.
///
/// # Safety
/// `config_json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gs_run_from_json(
    config_json: *const c_char,
    out: *mut *mut GsRun,
) -> GsStatus {
    guard(|| {
        if out.is_null() {
            return fail(GsStatus::NullArgument, "null output pointer");
        }
        *out = ptr::null_mut();
        let text = try_status!(read_str(config_json));
        let config = try_status!(config_from_json(text).map_err(from_error));
        let errs = validate(&config);
        if !errs.is_empty() {
            return from_error(Error::Invalid(errs));
        }
        let output = try_status!(execute(&config).map_err(from_error));
        *out = Box::into_raw(Box::new(GsRun { output }));
        GsStatus::Ok
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `run` must come from `gs_run_from_json` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn gs_run_free(run: *mut GsRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Summary JSON: resolved config, seed, drift, skew report and verdicts.
///
/// # Safety
/// `run` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gs_run_summary_json(run: *const GsRun, out: *mut *mut c_char) -> GsStatus {
    guard(|| {
        let run = try_status!(run_ref(run));
        if out.is_null() {
            return fail(GsStatus::NullArgument, "null output pointer");
        }
        let mut buf = Vec::new();
        try_status!(write_summary_json(&run.output.summary, &mut buf).map_err(from_error));
        hand_out(String::from_utf8_lossy(&buf).into_owned(), out)
    })
}

/// Trace CSV with columns `time,node,logical,rate,alpha,event_kind`.
///
/// # Safety
/// `run` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gs_run_trace_csv(run: *const GsRun, out: *mut *mut c_char) -> GsStatus {
    guard(|| {
        let run = try_status!(run_ref(run));
        if out.is_null() {
            return fail(GsStatus::NullArgument, "null output pointer");
        }
        let mut buf = Vec::new();
        try_status!(write_trace_csv(&run.output.trace, &mut buf).map_err(from_error));
        hand_out(String::from_utf8_lossy(&buf).into_owned(), out)
    })
}

/// Largest skew between any two clocks over the run.
///
/// # Safety
/// `run` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gs_run_global_skew(run: *const GsRun, out: *mut f64) -> GsStatus {
    guard(|| {
        let run = try_status!(run_ref(run));
        match out.as_mut() {
            Some(o) => {
                *o = run.output.summary.report.max_global_skew.value;
                GsStatus::Ok
            }
            None => fail(GsStatus::NullArgument, "null output pointer"),
        }
    })
}

/// Largest skew between neighbors over the run.
///
/// # Safety
/// `run` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gs_run_neighbor_skew(run: *const GsRun, out: *mut f64) -> GsStatus {
    guard(|| {
        let run = try_status!(run_ref(run));
        match out.as_mut() {
            Some(o) => {
                *o = run.output.summary.report.neighbor_skew();
                GsStatus::Ok
            }
            None => fail(GsStatus::NullArgument, "null output pointer"),
        }
    })
}

/// Sets `*out` to 1 if every guaranteed bound held, 0 otherwise.
///
/// # Safety
/// `run` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gs_run_bounds_hold(run: *const GsRun, out: *mut i32) -> GsStatus {
    guard(|| {
        let run = try_status!(run_ref(run));
        match out.as_mut() {
            Some(o) => {
                *o = i32::from(run.output.summary.guaranteed_pass());
                GsStatus::Ok
            }
            None => fail(GsStatus::NullArgument, "null output pointer"),
        }
    })
}

/// Checks a configuration without running it. Returns `GS_STATUS_OK` when
/// valid, otherwise `GS_STATUS_INVALID_CONFIG` with the violations in
/// `gs_last_error`.
///
/// # Safety
/// `config_json` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn gs_validate_json(config_json: *const c_char) -> GsStatus {
    guard(|| {
        let text = try_status!(read_str(config_json));
        let config = try_status!(config_from_json(text).map_err(from_error));
        let errs = validate(&config);
        if errs.is_empty() {
            GsStatus::Ok
        } else {
            from_error(Error::Invalid(errs))
        }
    })
}

/// Run config JSON for a named preset. `size` 0 keeps the preset default.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gs_preset_json(
    name: *const c_char,
    size: u32,
    out: *mut *mut c_char,
) -> GsStatus {
    guard(|| {
        if out.is_null() {
            return fail(GsStatus::NullArgument, "null output pointer");
        }
        let name = try_status!(read_str(name));
        let spec = PresetSpec {
            size: (size > 0).then_some(size),
            ..PresetSpec::named(name)
        };
        let config = try_status!(spec.build().map_err(from_error));
        match serde_json::to_string_pretty(&config) {
            Ok(text) => hand_out(text, out),
            Err(e) => fail(GsStatus::Internal, e.to_string()),
        }
    })
}

/// `min(D, (1 + rho_hat) * D * d / c)`.
#[no_mangle]
pub extern "C" fn gs_wait_chain_length(diameter: u32, rho_hat: f64, d: f64, c: f64) -> f64 {
    wait_chain_length(diameter, rho_hat, d, c)
}

/// Message for the last failed call on this thread, or null. Valid until
/// the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn gs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn gs_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
