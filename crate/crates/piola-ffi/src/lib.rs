//! C ABI for the verification toolkit.
//!
//! Conventions: opaque handles created/destroyed by paired functions,
//! integer error codes (0 = success), and a thread-local last-error
//! message. Strings returned through out-pointers must be released with
//! `piola_string_free`. The generated header lands in `include/piola.h`.

use piola_core::runner::{self, Overrides, Report, Scenario};
use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

pub const PIOLA_OK: c_int = 0;
/// A required pointer argument was null.
pub const PIOLA_ERR_NULL_ARGUMENT: c_int = 1;
/// A string argument was not valid UTF-8.
pub const PIOLA_ERR_INVALID_UTF8: c_int = 2;
/// Scenario JSON failed to parse or validate; see `piola_last_error`.
pub const PIOLA_ERR_LOAD: c_int = 3;
/// Check execution failed; see `piola_last_error`.
pub const PIOLA_ERR_RUNTIME: c_int = 4;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes stripped");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

/// Message for the most recent failure on this thread, or null. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn piola_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map_or(std::ptr::null(), |c| c.as_ptr())
    })
}

/// Opaque validated scenario.
pub struct PiolaScenario {
    inner: Scenario,
}

/// Opaque verification report.
pub struct PiolaReport {
    inner: Report,
}

/// # Safety
/// `text` must be a valid nul-terminated string; `out` must be valid.
unsafe fn read_str<'a>(text: *const c_char) -> Result<&'a str, c_int> {
    if text.is_null() {
        return Err(PIOLA_ERR_NULL_ARGUMENT);
    }
    CStr::from_ptr(text).to_str().map_err(|_| {
        set_error("argument is not valid UTF-8".into());
        PIOLA_ERR_INVALID_UTF8
    })
}

/// Parse and validate a scenario from JSON text.
///
/// # Safety
/// `json` must be nul-terminated; `out` must point to writable storage.
#[no_mangle]
pub unsafe extern "C" fn piola_scenario_from_json(
    json: *const c_char,
    out: *mut *mut PiolaScenario,
) -> c_int {
    if out.is_null() {
        return PIOLA_ERR_NULL_ARGUMENT;
    }
    let text = match read_str(json) {
        Ok(t) => t,
        Err(code) => return code,
    };
    match Scenario::from_json_str(text) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(PiolaScenario { inner }));
            PIOLA_OK
        }
        Err(e) => {
            set_error(e.to_string());
            PIOLA_ERR_LOAD
        }
    }
}

/// Load one of the built-in scenarios by name.
///
/// # Safety
/// `name` must be nul-terminated; `out` must point to writable storage.
#[no_mangle]
pub unsafe extern "C" fn piola_scenario_builtin(
    name: *const c_char,
    out: *mut *mut PiolaScenario,
) -> c_int {
    if out.is_null() {
        return PIOLA_ERR_NULL_ARGUMENT;
    }
    let name = match read_str(name) {
        Ok(t) => t,
        Err(code) => return code,
    };
    match Scenario::builtin(name) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(PiolaScenario { inner }));
            PIOLA_OK
        }
        Err(e) => {
            set_error(e.to_string());
            PIOLA_ERR_LOAD
        }
    }
}

/// # Safety
/// `scenario` must come from a piola_scenario_* constructor, or be null.
#[no_mangle]
pub unsafe extern "C" fn piola_scenario_free(scenario: *mut PiolaScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Run every check of the scenario. A negative `seed` keeps the
/// scenario's own seed; a non-negative value overrides it.
///
/// # Safety
/// `scenario` must be a live handle; `out` must point to writable storage.
#[no_mangle]
pub unsafe extern "C" fn piola_run(
    scenario: *const PiolaScenario,
    seed: i64,
    out: *mut *mut PiolaReport,
) -> c_int {
    if scenario.is_null() || out.is_null() {
        return PIOLA_ERR_NULL_ARGUMENT;
    }
    let scenario = &(*scenario).inner;
    let overrides = Overrides {
        seed: (seed >= 0).then_some(seed as u64),
        ..Default::default()
    };
    match catch_unwind(AssertUnwindSafe(|| runner::run(scenario, &overrides))) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(PiolaReport { inner }));
            PIOLA_OK
        }
        Err(_) => {
            set_error("internal panic while running checks".into());
            PIOLA_ERR_RUNTIME
        }
    }
}

/// 1 if every check passed, 0 otherwise; -1 on null input.
///
/// # Safety
/// `report` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn piola_report_passed(report: *const PiolaReport) -> c_int {
    if report.is_null() {
        return -1;
    }
    (*report).inner.passed() as c_int
}

fn string_out(text: String, out: *mut *mut c_char) -> c_int {
    match CString::new(text) {
        Ok(c) => {
            unsafe { *out = c.into_raw() };
            PIOLA_OK
        }
        Err(_) => {
            set_error("rendered report contained a nul byte".into());
            PIOLA_ERR_RUNTIME
        }
    }
}

/// Render the report as the stable JSON schema. Free with
/// `piola_string_free`.
///
/// # Safety
/// `report` must be a live handle; `out` must point to writable storage.
#[no_mangle]
pub unsafe extern "C" fn piola_report_json(
    report: *const PiolaReport,
    out: *mut *mut c_char,
) -> c_int {
    if report.is_null() || out.is_null() {
        return PIOLA_ERR_NULL_ARGUMENT;
    }
    string_out((*report).inner.render_json(), out)
}

/// Render the report as the human-readable table. Free with
/// `piola_string_free`.
///
/// # Safety
/// `report` must be a live handle; `out` must point to writable storage.
#[no_mangle]
pub unsafe extern "C" fn piola_report_text(
    report: *const PiolaReport,
    out: *mut *mut c_char,
) -> c_int {
    if report.is_null() || out.is_null() {
        return PIOLA_ERR_NULL_ARGUMENT;
    }
    string_out((*report).inner.render_text(), out)
}

/// # Safety
/// `report` must come from `piola_run`, or be null.
#[no_mangle]
pub unsafe extern "C" fn piola_report_free(report: *mut PiolaReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// # Safety
/// `text` must come from a piola_report_* renderer, or be null.
#[no_mangle]
pub unsafe extern "C" fn piola_string_free(text: *mut c_char) {
    if !text.is_null() {
        drop(CString::from_raw(text));
    }
}
