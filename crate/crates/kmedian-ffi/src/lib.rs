//! C ABI for the k-median solver toolkit.
//!
//! Conventions:
//! - Opaque handles (`KmInstance`, `KmHypergraph`) own their Rust values;
//!   free them with the matching `km_*_free`.
//! - Every fallible call returns a [`KmStatus`]; `KM_STATUS_OK` is 0.
//!   On failure, `km_last_error()` returns a message for the calling
//!   thread, valid until the next failing call on that thread.
//! - Structured results are returned as newly allocated JSON strings;
//!   release them with `km_string_free`.
//!
//! The committed header `include/kmedian.h` mirrors these signatures.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::ptr;

use kmedian::error::Error;
use kmedian::gadgets::{self, Hypergraph};
use kmedian::metric::MetricInstance;
use kmedian::oracle;
use kmedian::rounding::{solve, CoresetMode, SolveMode, SolveParams};
use kmedian::{bounds, guessing};

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    BudgetExceeded = 3,
    Internal = 4,
}

/// Opaque problem instance handle.
pub struct KmInstance(MetricInstance);

/// Opaque hypergraph handle.
pub struct KmHypergraph(Hypergraph);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: &str) {
    let stored = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|cell| *cell.borrow_mut() = Some(stored));
}

fn status_of(error: &Error) -> KmStatus {
    match error.exit_code() {
        3 => KmStatus::BudgetExceeded,
        4 => KmStatus::Internal,
        _ => KmStatus::InvalidArgument,
    }
}

fn fail(error: Error) -> KmStatus {
    set_error(&error.to_string());
    status_of(&error)
}

/// Message of the last failing call on this thread, or NULL. Owned by the
/// library; do not free. Invalidated by the next failing call.
#[no_mangle]
pub extern "C" fn km_last_error() -> *const c_char {
    LAST_ERROR.with(|cell| {
        cell.borrow()
            .as_ref()
            .map_or(ptr::null(), |message| message.as_ptr())
    })
}

/// Release a string returned by this library.
///
/// # Safety
/// `s` must be NULL or a pointer previously returned by a `km_*` function
/// that allocates a string, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn km_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

unsafe fn read_str<'a>(text: *const c_char) -> Result<&'a str, KmStatus> {
    if text.is_null() {
        set_error("null string argument");
        return Err(KmStatus::NullPointer);
    }
    CStr::from_ptr(text).to_str().map_err(|_| {
        set_error("string argument is not valid UTF-8");
        KmStatus::InvalidArgument
    })
}

fn give_string(json: String, out: *mut *mut c_char) -> KmStatus {
    let Ok(cstring) = CString::new(json) else {
        set_error("result contained an interior NUL byte");
        return KmStatus::Internal;
    };
    unsafe { *out = cstring.into_raw() };
    KmStatus::Ok
}

/// Parse an instance from its JSON form.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid location; the
/// returned handle must be released with `km_instance_free`.
#[no_mangle]
pub unsafe extern "C" fn km_instance_from_json(
    json: *const c_char,
    out: *mut *mut KmInstance,
) -> KmStatus {
    if out.is_null() {
        set_error("null output pointer");
        return KmStatus::NullPointer;
    }
    let text = match read_str(json) {
        Ok(text) => text,
        Err(status) => return status,
    };
    match MetricInstance::from_json(text) {
        Ok(instance) => {
            *out = Box::into_raw(Box::new(KmInstance(instance)));
            KmStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Build an instance from a dense row-major `n x n` distance matrix and an
/// optional weight vector (NULL for unit weights).
///
/// # Safety
/// `matrix` must point to `n * n` readable doubles, `weights` to `n`
/// readable doubles or NULL, and `out` to a valid location.
#[no_mangle]
pub unsafe extern "C" fn km_instance_from_matrix(
    n: usize,
    matrix: *const f64,
    weights: *const f64,
    out: *mut *mut KmInstance,
) -> KmStatus {
    if out.is_null() || (n > 0 && matrix.is_null()) {
        set_error("null matrix or output pointer");
        return KmStatus::NullPointer;
    }
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|u| std::slice::from_raw_parts(matrix.add(u * n), n).to_vec())
        .collect();
    let weight_vec = if weights.is_null() {
        None
    } else {
        Some(std::slice::from_raw_parts(weights, n).to_vec())
    };
    match MetricInstance::from_matrix(rows, weight_vec, None) {
        Ok(instance) => {
            *out = Box::into_raw(Box::new(KmInstance(instance)));
            KmStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Number of points, or 0 for a NULL handle.
///
/// # Safety
/// `instance` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn km_instance_points(instance: *const KmInstance) -> usize {
    instance.as_ref().map_or(0, |h| h.0.n())
}

/// Count metric violations (symmetry, triangle inequality, signs).
///
/// # Safety
/// `instance` must be a live handle and `out_violations` writable.
#[no_mangle]
pub unsafe extern "C" fn km_instance_validate(
    instance: *const KmInstance,
    out_violations: *mut usize,
) -> KmStatus {
    let Some(handle) = instance.as_ref() else {
        set_error("null instance");
        return KmStatus::NullPointer;
    };
    if out_violations.is_null() {
        set_error("null output pointer");
        return KmStatus::NullPointer;
    }
    *out_violations = handle.0.validate().len();
    KmStatus::Ok
}

/// Weighted nearest-center cost of a center set.
///
/// # Safety
/// `centers` must point to `num_centers` readable indices; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn km_instance_cost(
    instance: *const KmInstance,
    centers: *const usize,
    num_centers: usize,
    out: *mut f64,
) -> KmStatus {
    let Some(handle) = instance.as_ref() else {
        set_error("null instance");
        return KmStatus::NullPointer;
    };
    if out.is_null() || (num_centers > 0 && centers.is_null()) {
        set_error("null pointer argument");
        return KmStatus::NullPointer;
    }
    let centers = std::slice::from_raw_parts(centers, num_centers);
    if centers.iter().any(|&c| c >= handle.0.n()) {
        set_error("center index out of range");
        return KmStatus::InvalidArgument;
    }
    match handle.0.cost(centers) {
        Ok(value) => {
            *out = value;
            KmStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Release an instance handle.
///
/// # Safety
/// `instance` must be NULL or an unfreed handle from this library.
#[no_mangle]
pub unsafe extern "C" fn km_instance_free(instance: *mut KmInstance) {
    if !instance.is_null() {
        drop(Box::from_raw(instance));
    }
}

/// Run the LP-rounding pipeline. `p_threshold < 0` selects the analysis
/// optimum; `mode` is 0 for full enumeration, 1 for the planted guess.
/// Writes a solution-report JSON string.
///
/// # Safety
/// `instance` must be a live handle and `out_json` writable; release the
/// string with `km_string_free`.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn km_solve(
    instance: *const KmInstance,
    k: usize,
    epsilon: f64,
    p_threshold: f64,
    trials: u64,
    mode: u32,
    seed: u64,
    out_json: *mut *mut c_char,
) -> KmStatus {
    let Some(handle) = instance.as_ref() else {
        set_error("null instance");
        return KmStatus::NullPointer;
    };
    if out_json.is_null() {
        set_error("null output pointer");
        return KmStatus::NullPointer;
    }
    let mode = match mode {
        0 => SolveMode::Full,
        1 => SolveMode::Planted { centers: None },
        other => {
            set_error(&format!(
                "unknown mode {other}; use 0 (full) or 1 (planted)"
            ));
            return KmStatus::InvalidArgument;
        }
    };
    let params = SolveParams {
        k,
        epsilon,
        p: (p_threshold >= 0.0).then_some(p_threshold),
        trials,
        mode,
        seed,
        guess_budget: guessing::DEFAULT_GUESS_BUDGET,
        coreset: CoresetMode::Identity,
    };
    match solve(&handle.0, &params) {
        Ok(report) => match serde_json::to_string_pretty(&report) {
            Ok(json) => give_string(json, out_json),
            Err(e) => fail(Error::Json(e)),
        },
        Err(e) => fail(e),
    }
}

/// Exact k-median optimum by exhaustive enumeration, as JSON.
///
/// # Safety
/// `instance` must be a live handle and `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn km_oracle_kmedian(
    instance: *const KmInstance,
    k: usize,
    out_json: *mut *mut c_char,
) -> KmStatus {
    let Some(handle) = instance.as_ref() else {
        set_error("null instance");
        return KmStatus::NullPointer;
    };
    if out_json.is_null() {
        set_error("null output pointer");
        return KmStatus::NullPointer;
    }
    match oracle::brute_force_kmedian(&handle.0, k) {
        Ok(result) => match serde_json::to_string_pretty(&result) {
            Ok(json) => give_string(json, out_json),
            Err(e) => fail(Error::Json(e)),
        },
        Err(e) => fail(e),
    }
}

/// Analysis constants (thresholds and both factor-revealing optima) as JSON.
///
/// # Safety
/// `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn km_bounds_constants(out_json: *mut *mut c_char) -> KmStatus {
    if out_json.is_null() {
        set_error("null output pointer");
        return KmStatus::NullPointer;
    }
    match bounds::analysis_constants() {
        Ok(constants) => match serde_json::to_string_pretty(&constants) {
            Ok(json) => give_string(json, out_json),
            Err(e) => fail(Error::Json(e)),
        },
        Err(e) => fail(e),
    }
}

/// Envelope grid verification report as JSON.
///
/// # Safety
/// `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn km_bounds_verify(
    resolution: u32,
    d_max: u32,
    out_json: *mut *mut c_char,
) -> KmStatus {
    if out_json.is_null() {
        set_error("null output pointer");
        return KmStatus::NullPointer;
    }
    match bounds::verify_envelope_at(bounds::p_star(), resolution, d_max) {
        Ok(report) => match serde_json::to_string_pretty(&report) {
            Ok(json) => give_string(json, out_json),
            Err(e) => fail(Error::Json(e)),
        },
        Err(e) => fail(e),
    }
}

/// Parse a hypergraph from its JSON form.
///
/// # Safety
/// `json` must be a NUL-terminated string; release the handle with
/// `km_hypergraph_free`.
#[no_mangle]
pub unsafe extern "C" fn km_hypergraph_from_json(
    json: *const c_char,
    out: *mut *mut KmHypergraph,
) -> KmStatus {
    if out.is_null() {
        set_error("null output pointer");
        return KmStatus::NullPointer;
    }
    let text = match read_str(json) {
        Ok(text) => text,
        Err(status) => return status,
    };
    match Hypergraph::from_json(text) {
        Ok(hypergraph) => {
            *out = Box::into_raw(Box::new(KmHypergraph(hypergraph)));
            KmStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Release a hypergraph handle.
///
/// # Safety
/// `hypergraph` must be NULL or an unfreed handle from this library.
#[no_mangle]
pub unsafe extern "C" fn km_hypergraph_free(hypergraph: *mut KmHypergraph) {
    if !hypergraph.is_null() {
        drop(Box::from_raw(hypergraph));
    }
}

/// Generate a planted-cover (`kind` 0) or uniformly random (`kind` 1)
/// d-uniform hypergraph, as JSON.
///
/// # Safety
/// `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn km_gen_hypergraph(
    kind: u32,
    n: usize,
    d: usize,
    m: usize,
    seed: u64,
    out_json: *mut *mut c_char,
) -> KmStatus {
    if out_json.is_null() {
        set_error("null output pointer");
        return KmStatus::NullPointer;
    }
    let result = match kind {
        0 => gadgets::planted_cover_hypergraph(n, d, m, seed).map(|(h, _)| h),
        1 => gadgets::random_hypergraph(n, d, m, seed),
        other => {
            set_error(&format!(
                "unknown kind {other}; use 0 (planted) or 1 (random)"
            ));
            return KmStatus::InvalidArgument;
        }
    };
    match result {
        Ok(h) => give_string(h.to_json(), out_json),
        Err(e) => fail(e),
    }
}

/// Reduce a hypergraph to a k-median instance over its incidence-graph
/// shortest-path metric. Writes the instance JSON and the sidecar JSON
/// (`{k, vertex_side, edge_side}`).
///
/// # Safety
/// `hypergraph` must be a live handle; both out pointers writable.
#[no_mangle]
pub unsafe extern "C" fn km_reduce(
    hypergraph: *const KmHypergraph,
    copies: usize,
    complete_triples: bool,
    out_instance_json: *mut *mut c_char,
    out_sidecar_json: *mut *mut c_char,
) -> KmStatus {
    let Some(handle) = hypergraph.as_ref() else {
        set_error("null hypergraph");
        return KmStatus::NullPointer;
    };
    if out_instance_json.is_null() || out_sidecar_json.is_null() {
        set_error("null output pointer");
        return KmStatus::NullPointer;
    }
    match gadgets::incidence_reduction(&handle.0, copies, complete_triples) {
        Ok((instance, sidecar)) => {
            let sidecar_json = match serde_json::to_string_pretty(&sidecar) {
                Ok(json) => json,
                Err(e) => return fail(Error::Json(e)),
            };
            let status = give_string(instance.to_json(), out_instance_json);
            if status != KmStatus::Ok {
                return status;
            }
            let status = give_string(sidecar_json, out_sidecar_json);
            if status != KmStatus::Ok {
                km_string_free(*out_instance_json);
                *out_instance_json = ptr::null_mut();
            }
            status
        }
        Err(e) => fail(e),
    }
}

/// Coverage optimum of a hypergraph: exhaustive when `greedy` is false,
/// the greedy heuristic otherwise. Result as JSON.
///
/// # Safety
/// `hypergraph` must be a live handle and `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn km_coverage_oracle(
    hypergraph: *const KmHypergraph,
    k: usize,
    greedy: bool,
    out_json: *mut *mut c_char,
) -> KmStatus {
    let Some(handle) = hypergraph.as_ref() else {
        set_error("null hypergraph");
        return KmStatus::NullPointer;
    };
    if out_json.is_null() {
        set_error("null output pointer");
        return KmStatus::NullPointer;
    }
    let result = if greedy {
        Ok(oracle::greedy_coverage(&handle.0, k))
    } else {
        oracle::brute_force_coverage(&handle.0, k)
    };
    match result {
        Ok(result) => match serde_json::to_string_pretty(&result) {
            Ok(json) => give_string(json, out_json),
            Err(e) => fail(Error::Json(e)),
        },
        Err(e) => fail(e),
    }
}
