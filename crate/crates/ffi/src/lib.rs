//! C ABI for the lightcone verification library.
//!
//! The interface follows the usual opaque-handle pattern: scenarios and
//! reports are heap-allocated Rust objects behind forward-declared struct
//! pointers, every fallible call returns an `LcStatus`, and the last error
//! message is retrievable per thread via `lc_last_error`. Strings returned
//! by the library are NUL-terminated copies the caller releases with
//! `lc_string_free`. The generated header lands in `include/lightcone.h`.

use lightcone::report::ReportBundle;
use lightcone::scenario::{ConfigError, Scenario};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LcStatus {
    /// The call succeeded.
    LcOk = 0,
    /// The scenario file or TOML text is malformed or fails validation.
    LcConfigError = 1,
    /// A pipeline failed to run (solver error, I/O failure, ...).
    LcRuntimeError = 2,
    /// A required pointer argument was NULL or an index was out of range.
    LcNullArgument = 3,
    /// A string argument was not valid UTF-8.
    LcInvalidUtf8 = 4,
    /// The library panicked internally; the handle states are unchanged.
    LcPanic = 5,
}

/// Opaque verification scenario (parsed and validated configuration).
pub struct LcScenario(Scenario);

/// Opaque verification report (ordered pass/fail entries).
pub struct LcReport(ReportBundle);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let owned = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = owned);
}

fn classify(err: &anyhow::Error) -> LcStatus {
    if err.downcast_ref::<ConfigError>().is_some() {
        LcStatus::LcConfigError
    } else {
        LcStatus::LcRuntimeError
    }
}

/// # Safety: `ptr` must be NULL or a NUL-terminated string.
unsafe fn utf8_arg<'a>(ptr: *const c_char) -> Result<&'a str, LcStatus> {
    if ptr.is_null() {
        set_error("NULL string argument");
        return Err(LcStatus::LcNullArgument);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error("string argument is not valid UTF-8");
        LcStatus::LcInvalidUtf8
    })
}

fn guarded(f: impl FnOnce() -> LcStatus) -> LcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            LcStatus::LcPanic
        }
    }
}

unsafe fn emit_scenario(
    out: *mut *mut LcScenario,
    result: Result<Scenario, ConfigError>,
) -> LcStatus {
    if out.is_null() {
        set_error("NULL output handle");
        return LcStatus::LcNullArgument;
    }
    match result {
        Ok(s) => {
            *out = Box::into_raw(Box::new(LcScenario(s)));
            LcStatus::LcOk
        }
        Err(e) => {
            set_error(&e.to_string());
            LcStatus::LcConfigError
        }
    }
}

/// Last error message raised on this thread, valid until the next library
/// call on the same thread. Never NULL; empty before any error.
#[no_mangle]
pub extern "C" fn lc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Parse and validate a scenario from a TOML file on disk.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lc_scenario_load(
    path: *const c_char,
    out: *mut *mut LcScenario,
) -> LcStatus {
    guarded(|| {
        let path = match utf8_arg(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        emit_scenario(out, Scenario::load(Path::new(path)))
    })
}

/// Instantiate a bundled scenario (`minkowski-moretti`, `overcoupled-gauge`).
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lc_scenario_builtin(
    name: *const c_char,
    out: *mut *mut LcScenario,
) -> LcStatus {
    guarded(|| {
        let name = match utf8_arg(name) {
            Ok(n) => n,
            Err(s) => return s,
        };
        emit_scenario(out, Scenario::builtin(name))
    })
}

/// Parse and validate a scenario from TOML text.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lc_scenario_from_toml(
    text: *const c_char,
    out: *mut *mut LcScenario,
) -> LcStatus {
    guarded(|| {
        let text = match utf8_arg(text) {
            Ok(t) => t,
            Err(s) => return s,
        };
        emit_scenario(out, Scenario::from_toml_str(text))
    })
}

/// Override the scenario seed.
///
/// # Safety
/// `scenario` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn lc_scenario_set_seed(scenario: *mut LcScenario, seed: u64) -> LcStatus {
    if scenario.is_null() {
        set_error("NULL scenario handle");
        return LcStatus::LcNullArgument;
    }
    (*scenario).0.seed = seed;
    LcStatus::LcOk
}

/// Scenario name as a fresh NUL-terminated copy (release with
/// `lc_string_free`). Returns NULL on a NULL handle.
///
/// # Safety
/// `scenario` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn lc_scenario_name(scenario: *const LcScenario) -> *mut c_char {
    if scenario.is_null() {
        return std::ptr::null_mut();
    }
    CString::new((*scenario).0.name.clone())
        .map(CString::into_raw)
        .unwrap_or(std::ptr::null_mut())
}

unsafe fn emit_report(
    out: *mut *mut LcReport,
    result: anyhow::Result<ReportBundle>,
) -> LcStatus {
    if out.is_null() {
        set_error("NULL output handle");
        return LcStatus::LcNullArgument;
    }
    match result {
        Ok(bundle) => {
            *out = Box::into_raw(Box::new(LcReport(bundle)));
            LcStatus::LcOk
        }
        Err(e) => {
            let status = classify(&e);
            set_error(&format!("{e:#}"));
            status
        }
    }
}

/// Run every pipeline the scenario enables. `out_dir` may be NULL (no
/// report files are written); otherwise the directory is created and
/// `report.json` plus CSV tables land there. The call succeeds even when
/// checks FAIL — inspect the report.
///
/// # Safety
/// `scenario` must be a live handle; `out_dir` NULL or NUL-terminated;
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lc_scenario_run(
    scenario: *const LcScenario,
    out_dir: *const c_char,
    out: *mut *mut LcReport,
) -> LcStatus {
    guarded(|| {
        if scenario.is_null() {
            set_error("NULL scenario handle");
            return LcStatus::LcNullArgument;
        }
        let dir = if out_dir.is_null() {
            None
        } else {
            match utf8_arg(out_dir) {
                Ok(d) => Some(d),
                Err(s) => return s,
            }
        };
        emit_report(out, (*scenario).0.run(dir.map(Path::new)))
    })
}

/// Run the grid-refinement convergence sweep (`levels` ≥ 3).
///
/// # Safety
/// Same contracts as `lc_scenario_run`.
#[no_mangle]
pub unsafe extern "C" fn lc_scenario_sweep(
    scenario: *const LcScenario,
    levels: usize,
    out_dir: *const c_char,
    out: *mut *mut LcReport,
) -> LcStatus {
    guarded(|| {
        if scenario.is_null() {
            set_error("NULL scenario handle");
            return LcStatus::LcNullArgument;
        }
        let dir = if out_dir.is_null() {
            None
        } else {
            match utf8_arg(out_dir) {
                Ok(d) => Some(d),
                Err(s) => return s,
            }
        };
        emit_report(out, (*scenario).0.convergence_sweep(levels, dir.map(Path::new)))
    })
}

/// 1 when every entry passed, 0 otherwise (0 on a NULL handle).
///
/// # Safety
/// `report` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn lc_report_all_pass(report: *const LcReport) -> i32 {
    if report.is_null() {
        return 0;
    }
    (*report).0.all_pass() as i32
}

/// Number of check entries (0 on a NULL handle).
///
/// # Safety
/// `report` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn lc_report_len(report: *const LcReport) -> usize {
    if report.is_null() {
        return 0;
    }
    (*report).0.entries.len()
}

/// Entry identifier (e.g. `"bulk.monomorphism"`) as a fresh copy (release
/// with `lc_string_free`). NULL on a NULL handle or out-of-range index.
///
/// # Safety
/// `report` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn lc_report_entry_id(report: *const LcReport, index: usize) -> *mut c_char {
    if report.is_null() {
        return std::ptr::null_mut();
    }
    let bundle = &(*report).0;
    match bundle.entries.get(index) {
        Some(e) => CString::new(e.id.clone())
            .map(CString::into_raw)
            .unwrap_or(std::ptr::null_mut()),
        None => std::ptr::null_mut(),
    }
}

/// Measured value of an entry (NaN on a NULL handle or bad index).
///
/// # Safety
/// `report` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn lc_report_entry_value(report: *const LcReport, index: usize) -> f64 {
    if report.is_null() {
        return f64::NAN;
    }
    let bundle = &(*report).0;
    bundle.entries.get(index).map_or(f64::NAN, |e| e.value)
}

/// Threshold of an entry; NaN for informational entries, NULL handles, or
/// bad indices.
///
/// # Safety
/// `report` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn lc_report_entry_threshold(
    report: *const LcReport,
    index: usize,
) -> f64 {
    if report.is_null() {
        return f64::NAN;
    }
    let bundle = &(*report).0;
    bundle
        .entries
        .get(index)
        .and_then(|e| e.threshold)
        .unwrap_or(f64::NAN)
}

/// 1 when the entry passed, 0 otherwise (0 on NULL handle / bad index).
///
/// # Safety
/// `report` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn lc_report_entry_pass(report: *const LcReport, index: usize) -> i32 {
    if report.is_null() {
        return 0;
    }
    let bundle = &(*report).0;
    bundle.entries.get(index).is_some_and(|e| e.pass) as i32
}

/// Canonical JSON serialization of the report as a fresh copy (release with
/// `lc_string_free`). NULL on a NULL handle.
///
/// # Safety
/// `report` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn lc_report_to_json(report: *const LcReport) -> *mut c_char {
    if report.is_null() {
        return std::ptr::null_mut();
    }
    CString::new((*report).0.to_json())
        .map(CString::into_raw)
        .unwrap_or(std::ptr::null_mut())
}

/// Release a scenario handle. NULL is a no-op.
///
/// # Safety
/// `scenario` must be NULL or a handle obtained from this library, and must
/// not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn lc_scenario_free(scenario: *mut LcScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Release a report handle. NULL is a no-op.
///
/// # Safety
/// `report` must be NULL or a handle obtained from this library, and must
/// not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn lc_report_free(report: *mut LcReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Release a string returned by this library. NULL is a no-op.
///
/// # Safety
/// `s` must be NULL or a string obtained from this library, and must not be
/// used afterwards.
#[no_mangle]
pub unsafe extern "C" fn lc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CString;
    use std::ptr;

    #[test]
    fn builtin_round_trip_through_the_c_surface() {
        let name = CString::new("overcoupled-gauge").unwrap();
        let mut scenario: *mut LcScenario = ptr::null_mut();
        unsafe {
            assert_eq!(
                lc_scenario_builtin(name.as_ptr(), &mut scenario),
                LcStatus::LcOk
            );
            assert_eq!(lc_scenario_set_seed(scenario, 42), LcStatus::LcOk);
            let cname = lc_scenario_name(scenario);
            assert_eq!(
                CStr::from_ptr(cname).to_str().unwrap(),
                "overcoupled-gauge"
            );
            lc_string_free(cname);

            let mut report: *mut LcReport = ptr::null_mut();
            assert_eq!(
                lc_scenario_run(scenario, ptr::null(), &mut report),
                LcStatus::LcOk
            );
            assert_eq!(lc_report_all_pass(report), 0);
            let n = lc_report_len(report);
            assert!(n > 0);
            let mut saw_positivity_fail = false;
            for i in 0..n {
                let id = lc_report_entry_id(report, i);
                let id_str = CStr::from_ptr(id).to_str().unwrap().to_owned();
                lc_string_free(id);
                if id_str == "state.gauge.positivity" {
                    saw_positivity_fail = lc_report_entry_pass(report, i) == 0;
                    assert!(lc_report_entry_value(report, i).is_finite());
                    assert!(lc_report_entry_threshold(report, i).is_nan());
                }
            }
            assert!(saw_positivity_fail, "expected the positivity entry to FAIL");

            let json = lc_report_to_json(report);
            let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
            lc_string_free(json);
            assert!(text.contains("\"scenario\": \"overcoupled-gauge\""));

            lc_report_free(report);
            lc_scenario_free(scenario);
        }
    }

    #[test]
    fn malformed_toml_reports_config_error() {
        let text = CString::new("name = 3").unwrap();
        let mut scenario: *mut LcScenario = ptr::null_mut();
        unsafe {
            assert_eq!(
                lc_scenario_from_toml(text.as_ptr(), &mut scenario),
                LcStatus::LcConfigError
            );
            assert!(scenario.is_null());
            let msg = CStr::from_ptr(lc_last_error()).to_str().unwrap();
            assert!(!msg.is_empty());
        }
    }

    #[test]
    fn null_arguments_are_rejected_not_crashed() {
        let mut scenario: *mut LcScenario = ptr::null_mut();
        unsafe {
            assert_eq!(
                lc_scenario_builtin(ptr::null(), &mut scenario),
                LcStatus::LcNullArgument
            );
            assert_eq!(
                lc_scenario_load(ptr::null(), &mut scenario),
                LcStatus::LcNullArgument
            );
            assert_eq!(lc_report_all_pass(ptr::null()), 0);
            assert_eq!(lc_report_len(ptr::null()), 0);
            assert!(lc_report_entry_value(ptr::null(), 0).is_nan());
            assert!(lc_report_entry_id(ptr::null(), 0).is_null());
            lc_scenario_free(ptr::null_mut());
            lc_report_free(ptr::null_mut());
            lc_string_free(ptr::null_mut());
        }
    }
}
