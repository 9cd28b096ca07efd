//! C ABI over `ghz_witness`.
//!
//! Objects cross the boundary as opaque handles created by `gw_*_new` or a
//! computing call and released by the matching `gw_*_free`. Every fallible
//! call returns a [`GwStatus`]; on failure, [`gw_last_error_message`] holds a
//! description for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use ghz_witness::bound::{alpha_upper, BoundResult, GridSpec};
use ghz_witness::error::Error;
use ghz_witness::oracle::{alpha_oracle, SeesawConfig};
use ghz_witness::search::{
    noise_threshold_asymptotic, noise_threshold_exact, search_optimal, CMode, SearchConfig,
    SearchReport, ThresholdKind,
};
use ghz_witness::settings::SettingSet;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GwStatus {
    Ok = 0,
    InvalidArgument = 1,
    SizeGuard = 2,
    NullPointer = 3,
    Internal = 4,
}

/// How `C` is chosen in [`gw_search_optimal`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GwCMode {
    FixedAtSize = 0,
    IntegerScan = 1,
}

/// Opaque setting set.
pub struct GwSettingSet(SettingSet);

/// Opaque bound result.
pub struct GwBoundResult(BoundResult);

/// Opaque search report.
pub struct GwSearchReport(SearchReport);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let text = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = text);
}

fn fail(status: GwStatus, msg: &str) -> GwStatus {
    set_last_error(msg);
    status
}

fn from_error(err: Error) -> GwStatus {
    let status = if err.is_guard() {
        GwStatus::SizeGuard
    } else {
        GwStatus::InvalidArgument
    };
    fail(status, &err.to_string())
}

/// Runs `f`, turning panics into [`GwStatus::Internal`].
fn guarded(f: impl FnOnce() -> GwStatus) -> GwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => fail(GwStatus::Internal, "internal panic"),
    }
}

fn grid(step: f64, refine_rounds: u32) -> GridSpec {
    GridSpec {
        step,
        refine_rounds,
        ..GridSpec::default()
    }
}

/// Message for the last failed call on this thread; empty if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn gw_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gw_version() -> *const c_char {
    static VERSION: &CStr =
        match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
            Ok(v) => v,
            Err(_) => panic!("version contains NUL"),
        };
    VERSION.as_ptr()
}

/// Builds a setting set from `len` indices.
///
/// # Safety
/// `indices` must point to `len` readable values and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gw_setting_set_new(
    n_parties: usize,
    indices: *const usize,
    len: usize,
    out: *mut *mut GwSettingSet,
) -> GwStatus {
    guarded(|| {
        if out.is_null() || (indices.is_null() && len > 0) {
            return fail(GwStatus::NullPointer, "null pointer argument");
        }
        let idx: &[usize] = if len == 0 {
            &[]
        } else {
            std::slice::from_raw_parts(indices, len)
        };
        match SettingSet::new(n_parties, idx.iter().copied()) {
            Ok(s) => {
                *out = Box::into_raw(Box::new(GwSettingSet(s)));
                GwStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `set` must be null or a handle from [`gw_setting_set_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gw_setting_set_free(set: *mut GwSettingSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// Number of indices, or 0 for a null handle.
///
/// # Safety
/// `set` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gw_setting_set_len(set: *const GwSettingSet) -> usize {
    set.as_ref().map_or(0, |s| s.0.len())
}

/// Computes the grid bound for `(set, c)`.
///
/// # Safety
/// `set` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gw_alpha_upper(
    set: *const GwSettingSet,
    c: f64,
    step: f64,
    refine_rounds: u32,
    out: *mut *mut GwBoundResult,
) -> GwStatus {
    guarded(|| {
        let (Some(set), false) = (set.as_ref(), out.is_null()) else {
            return fail(GwStatus::NullPointer, "null pointer argument");
        };
        match alpha_upper(&set.0, c, &grid(step, refine_rounds)) {
            Ok(r) => {
                *out = Box::into_raw(Box::new(GwBoundResult(r)));
                GwStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `result` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn gw_bound_result_alpha(result: *const GwBoundResult) -> f64 {
    result.as_ref().map_or(f64::NAN, |r| r.0.alpha_upper)
}

/// # Safety
/// `result` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn gw_bound_result_evaluations(result: *const GwBoundResult) -> u64 {
    result.as_ref().map_or(0, |r| r.0.evaluations)
}

/// Bipartition size `k` at the maximizing grid point.
///
/// # Safety
/// `result` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn gw_bound_result_k(result: *const GwBoundResult) -> usize {
    result.as_ref().map_or(0, |r| r.0.arg_best.k)
}

/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gw_bound_result_free(result: *mut GwBoundResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

fn check_weight(size: usize, c: f64) -> Result<(), GwStatus> {
    if size == 0 || !(c.is_finite() && c > 0.0) {
        return Err(fail(
            GwStatus::InvalidArgument,
            "size must be positive and C a positive finite number",
        ));
    }
    Ok(())
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gw_noise_threshold_asymptotic(
    alpha: f64,
    size: usize,
    c: f64,
    out: *mut f64,
) -> GwStatus {
    if out.is_null() {
        return fail(GwStatus::NullPointer, "null pointer argument");
    }
    if let Err(s) = check_weight(size, c) {
        return s;
    }
    *out = noise_threshold_asymptotic(alpha, size, c);
    GwStatus::Ok
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gw_noise_threshold_exact(
    alpha: f64,
    size: usize,
    c: f64,
    n_parties: usize,
    out: *mut f64,
) -> GwStatus {
    if out.is_null() {
        return fail(GwStatus::NullPointer, "null pointer argument");
    }
    if let Err(s) = check_weight(size, c) {
        return s;
    }
    if n_parties < 2 {
        return fail(GwStatus::InvalidArgument, "need at least 2 parties");
    }
    *out = noise_threshold_exact(alpha, size, c, n_parties);
    GwStatus::Ok
}

/// Best setting set of size `budget`, ranked by the asymptotic threshold.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gw_search_optimal(
    n_parties: usize,
    budget: usize,
    c_mode: GwCMode,
    step: f64,
    refine_rounds: u32,
    out: *mut *mut GwSearchReport,
) -> GwStatus {
    guarded(|| {
        if out.is_null() {
            return fail(GwStatus::NullPointer, "null pointer argument");
        }
        let config = SearchConfig {
            c_mode: match c_mode {
                GwCMode::FixedAtSize => CMode::FixedAtSize,
                GwCMode::IntegerScan => CMode::IntegerScan,
            },
            grid: grid(step, refine_rounds),
            threshold: ThresholdKind::Asymptotic,
            ..SearchConfig::default()
        };
        match search_optimal(n_parties, budget, &config) {
            Ok(r) => {
                *out = Box::into_raw(Box::new(GwSearchReport(r)));
                GwStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `report` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn gw_search_report_threshold(report: *const GwSearchReport) -> f64 {
    report.as_ref().map_or(f64::NAN, |r| r.0.best.p_asymptotic)
}

/// # Safety
/// `report` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn gw_search_report_c(report: *const GwSearchReport) -> f64 {
    report.as_ref().map_or(f64::NAN, |r| r.0.best.c)
}

/// # Safety
/// `report` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn gw_search_report_alpha(report: *const GwSearchReport) -> f64 {
    report.as_ref().map_or(f64::NAN, |r| r.0.best.alpha_upper)
}

/// # Safety
/// `report` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn gw_search_report_ties(report: *const GwSearchReport) -> usize {
    report.as_ref().map_or(0, |r| r.0.ties.len())
}

/// Copies the best setting indices into `buf`. `out_len` always receives the
/// full length; a `capacity` that is too small yields `INVALID_ARGUMENT`.
///
/// # Safety
/// `report` must be a live handle, `buf` writable for `capacity` values and
/// `out_len` writable.
#[no_mangle]
pub unsafe extern "C" fn gw_search_report_settings(
    report: *const GwSearchReport,
    buf: *mut usize,
    capacity: usize,
    out_len: *mut usize,
) -> GwStatus {
    let Some(report) = report.as_ref() else {
        return fail(GwStatus::NullPointer, "null report");
    };
    if out_len.is_null() {
        return fail(GwStatus::NullPointer, "null out_len");
    }
    let idx = report.0.best.settings.indices();
    *out_len = idx.len();
    if capacity < idx.len() {
        return fail(GwStatus::InvalidArgument, "buffer too small");
    }
    if buf.is_null() {
        return fail(GwStatus::NullPointer, "null buffer");
    }
    std::ptr::copy_nonoverlapping(idx.as_ptr(), buf, idx.len());
    GwStatus::Ok
}

/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gw_search_report_free(report: *mut GwSearchReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// See-saw lower estimate of the biseparable bound.
///
/// # Safety
/// `set` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gw_alpha_oracle(
    set: *const GwSettingSet,
    c: f64,
    restarts: usize,
    seed: u64,
    out: *mut f64,
) -> GwStatus {
    guarded(|| {
        let (Some(set), false) = (set.as_ref(), out.is_null()) else {
            return fail(GwStatus::NullPointer, "null pointer argument");
        };
        let config = SeesawConfig {
            restarts,
            rng_seed: seed,
            ..SeesawConfig::default()
        };
        match set
            .0
            .check_weight(c)
            .and_then(|_| alpha_oracle(&set.0, c, &config))
        {
            Ok(r) => {
                *out = r.alpha_best;
                GwStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}
