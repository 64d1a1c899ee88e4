//! Exercise the C ABI the way a foreign binding would: through the raw
//! extern functions, CString arguments, and JSON string results.

use std::ffi::{CStr, CString};
use std::ptr;

use kmedian_ffi::*;

fn take_string(raw: *mut std::ffi::c_char) -> String {
    assert!(!raw.is_null());
    let text = unsafe { CStr::from_ptr(raw) }.to_str().unwrap().to_owned();
    unsafe { km_string_free(raw) };
    text
}

fn line3() -> *mut KmInstance {
    let json = CString::new(r#"{"metric": "euclidean", "points": [[0], [1], [3]]}"#).unwrap();
    let mut handle: *mut KmInstance = ptr::null_mut();
    let status = unsafe { km_instance_from_json(json.as_ptr(), &mut handle) };
    assert_eq!(status, KmStatus::Ok);
    handle
}

#[test]
fn instance_round_trip_and_cost() {
    let handle = line3();
    assert_eq!(unsafe { km_instance_points(handle) }, 3);

    let mut violations = usize::MAX;
    assert_eq!(
        unsafe { km_instance_validate(handle, &mut violations) },
        KmStatus::Ok
    );
    assert_eq!(violations, 0);

    let centers = [1usize];
    let mut cost = f64::NAN;
    let status = unsafe { km_instance_cost(handle, centers.as_ptr(), 1, &mut cost) };
    assert_eq!(status, KmStatus::Ok);
    assert_eq!(cost, 3.0);

    unsafe { km_instance_free(handle) };
}

#[test]
fn matrix_constructor_checks_entries() {
    let matrix = [0.0, 1.0, 1.0, 0.0];
    let mut handle: *mut KmInstance = ptr::null_mut();
    let status = unsafe { km_instance_from_matrix(2, matrix.as_ptr(), ptr::null(), &mut handle) };
    assert_eq!(status, KmStatus::Ok);
    assert_eq!(unsafe { km_instance_points(handle) }, 2);
    unsafe { km_instance_free(handle) };

    let bad = [0.0, f64::NAN, f64::NAN, 0.0];
    let status = unsafe { km_instance_from_matrix(2, bad.as_ptr(), ptr::null(), &mut handle) };
    assert_eq!(status, KmStatus::InvalidArgument);
    let message = unsafe { CStr::from_ptr(km_last_error()) }.to_str().unwrap();
    assert!(message.contains("non-finite"));
}

#[test]
fn solve_reaches_the_line_optimum() {
    let handle = line3();
    let mut json: *mut std::ffi::c_char = ptr::null_mut();
    let status = unsafe { km_solve(handle, 2, 0.1, -1.0, 50, 1, 7, &mut json) };
    assert_eq!(status, KmStatus::Ok);
    let report: serde_json::Value = serde_json::from_str(&take_string(json)).unwrap();
    assert_eq!(report["cost"].as_f64().unwrap(), 1.0);
    assert_eq!(report["seed"].as_u64().unwrap(), 7);
    unsafe { km_instance_free(handle) };
}

#[test]
fn oracle_matches_solver() {
    let handle = line3();
    let mut json: *mut std::ffi::c_char = ptr::null_mut();
    let status = unsafe { km_oracle_kmedian(handle, 2, &mut json) };
    assert_eq!(status, KmStatus::Ok);
    let result: serde_json::Value = serde_json::from_str(&take_string(json)).unwrap();
    assert_eq!(result["best_value"].as_f64().unwrap(), 1.0);
    unsafe { km_instance_free(handle) };
}

#[test]
fn null_arguments_are_rejected() {
    let mut handle: *mut KmInstance = ptr::null_mut();
    assert_eq!(
        unsafe { km_instance_from_json(ptr::null(), &mut handle) },
        KmStatus::NullPointer
    );
    let mut cost = 0.0;
    assert_eq!(
        unsafe { km_instance_cost(ptr::null(), ptr::null(), 0, &mut cost) },
        KmStatus::NullPointer
    );
    assert_eq!(unsafe { km_instance_points(ptr::null()) }, 0);
    unsafe { km_instance_free(ptr::null_mut()) };
    unsafe { km_hypergraph_free(ptr::null_mut()) };
    unsafe { km_string_free(ptr::null_mut()) };
}

#[test]
fn malformed_json_reports_a_message() {
    let json = CString::new("{not json").unwrap();
    let mut handle: *mut KmInstance = ptr::null_mut();
    let status = unsafe { km_instance_from_json(json.as_ptr(), &mut handle) };
    assert_eq!(status, KmStatus::InvalidArgument);
    let message = unsafe { CStr::from_ptr(km_last_error()) }.to_str().unwrap();
    assert!(!message.is_empty());
}

#[test]
fn bounds_constants_round_trip() {
    let mut json: *mut std::ffi::c_char = ptr::null_mut();
    let status = unsafe { km_bounds_constants(&mut json) };
    assert_eq!(status, KmStatus::Ok);
    let constants: serde_json::Value = serde_json::from_str(&take_string(json)).unwrap();
    let p_star = constants["p_star"].as_f64().unwrap();
    assert!((p_star - 0.21638837510877554).abs() < 1e-12);
    assert_eq!(constants["d_star"].as_u64().unwrap(), 3);
}

#[test]
fn bounds_verify_round_trip() {
    let mut json: *mut std::ffi::c_char = ptr::null_mut();
    let status = unsafe { km_bounds_verify(100, 5, &mut json) };
    assert_eq!(status, KmStatus::Ok);
    let report: serde_json::Value = serde_json::from_str(&take_string(json)).unwrap();
    assert_eq!(report["violations"].as_array().unwrap().len(), 0);
    assert!(report["max_psi"].as_f64().unwrap() <= 1.546);
}

#[test]
fn hypergraph_generation_reduction_and_coverage() {
    let mut gen_json: *mut std::ffi::c_char = ptr::null_mut();
    let status = unsafe { km_gen_hypergraph(0, 4, 3, 10, 1, &mut gen_json) };
    assert_eq!(status, KmStatus::Ok);
    let text = take_string(gen_json);

    let c_text = CString::new(text).unwrap();
    let mut handle: *mut KmHypergraph = ptr::null_mut();
    assert_eq!(
        unsafe { km_hypergraph_from_json(c_text.as_ptr(), &mut handle) },
        KmStatus::Ok
    );

    let mut coverage_json: *mut std::ffi::c_char = ptr::null_mut();
    assert_eq!(
        unsafe { km_coverage_oracle(handle, 2, false, &mut coverage_json) },
        KmStatus::Ok
    );
    let coverage: serde_json::Value = serde_json::from_str(&take_string(coverage_json)).unwrap();
    assert_eq!(coverage["best_value"].as_f64().unwrap(), 10.0);

    let mut instance_json: *mut std::ffi::c_char = ptr::null_mut();
    let mut sidecar_json: *mut std::ffi::c_char = ptr::null_mut();
    assert_eq!(
        unsafe { km_reduce(handle, 2, false, &mut instance_json, &mut sidecar_json) },
        KmStatus::Ok
    );
    let sidecar: serde_json::Value = serde_json::from_str(&take_string(sidecar_json)).unwrap();
    assert_eq!(sidecar["k"].as_u64().unwrap(), 2);
    let instance_text = take_string(instance_json);

    // the reduced instance loads back through the instance API
    let c_instance = CString::new(instance_text).unwrap();
    let mut reduced: *mut KmInstance = ptr::null_mut();
    assert_eq!(
        unsafe { km_instance_from_json(c_instance.as_ptr(), &mut reduced) },
        KmStatus::Ok
    );
    let mut violations = usize::MAX;
    assert_eq!(
        unsafe { km_instance_validate(reduced, &mut violations) },
        KmStatus::Ok
    );
    assert_eq!(violations, 0);

    unsafe { km_instance_free(reduced) };
    unsafe { km_hypergraph_free(handle) };
}

#[test]
fn budget_errors_map_to_their_status() {
    // 30 choose 15 overflows the default budget
    let n = 30;
    let mut matrix = vec![0.0f64; n * n];
    for u in 0..n {
        for v in 0..n {
            if u != v {
                matrix[u * n + v] = 1.0 + ((u * 31 + v * 17) % 7) as f64 / 7.0;
            }
        }
    }
    // symmetrize
    for u in 0..n {
        for v in 0..u {
            let d = matrix[v * n + u];
            matrix[u * n + v] = d;
        }
    }
    let mut handle: *mut KmInstance = ptr::null_mut();
    assert_eq!(
        unsafe { km_instance_from_matrix(n, matrix.as_ptr(), ptr::null(), &mut handle) },
        KmStatus::Ok
    );
    let mut json: *mut std::ffi::c_char = ptr::null_mut();
    let status = unsafe { km_oracle_kmedian(handle, 15, &mut json) };
    assert_eq!(status, KmStatus::BudgetExceeded);
    unsafe { km_instance_free(handle) };
}
