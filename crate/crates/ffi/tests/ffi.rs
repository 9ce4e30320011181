use std::ffi::{CStr, CString};
use std::ptr;

use shotlearn_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(sl_last_error_message()) }.to_string_lossy().into_owned()
}

#[test]
fn state_round_trip_and_purity() {
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(sl_state_sample(-1, 3, 7, 0, &mut s), SL_OK);
        let mut p = 0.0;
        assert_eq!(sl_state_reduced_purity(s, 0, &mut p), SL_OK);
        assert!((p - 1.0 / 3.0).abs() < 1e-12);
        let mut f = 0.0;
        assert_eq!(sl_state_overlap(s, s, &mut f), SL_OK);
        assert!((f - 1.0).abs() < 1e-12);
        assert_eq!(sl_state_reduced_purity(s, 5, &mut p), SL_INVALID_ARGUMENT);
        assert!(!last_error().is_empty());
        sl_state_free(s);
    }
}

#[test]
fn amplitudes_must_be_normalized() {
    let re = [1.0, 1.0, 0.0, 0.0];
    let im = [0.0; 4];
    let mut s = ptr::null_mut();
    unsafe {
        assert_eq!(sl_state_from_amplitudes(re.as_ptr(), im.as_ptr(), 2, &mut s), SL_INVALID_ARGUMENT);
        assert!(s.is_null());
        let re = [0.6, 0.8, 0.0, 0.0];
        assert_eq!(sl_state_from_amplitudes(re.as_ptr(), im.as_ptr(), 2, &mut s), SL_OK);
        sl_state_free(s);
    }
}

#[test]
fn null_pointers_are_reported() {
    unsafe {
        assert_eq!(sl_exact_delta(1, 1, 2, ptr::null_mut()), SL_NULL_POINTER);
        assert_eq!(sl_state_overlap(ptr::null(), ptr::null(), ptr::null_mut()), SL_NULL_POINTER);
        sl_state_free(ptr::null_mut());
        sl_svm_free(ptr::null_mut());
        sl_meanest_free(ptr::null_mut());
        sl_string_free(ptr::null_mut());
    }
}

#[test]
fn oracle_values() {
    unsafe {
        let mut v = 0.0;
        assert_eq!(sl_exact_delta(1, 1, 2, &mut v), SL_OK);
        assert!((v - 1.0 / 9.0).abs() < 1e-15);
        assert_eq!(sl_exact_delta(-1, -1, 2, &mut v), SL_OK);
        assert!((v - 0.125).abs() < 1e-15);
        assert_eq!(sl_b2_class_mean(-1, 2, &mut v), SL_OK);
        assert!((v + 5.0 / 72.0).abs() < 1e-15);
        assert_eq!(sl_swap_success_probability(2, &mut v), SL_OK);
        assert!((v - 0.625).abs() < 1e-15);
        assert_eq!(sl_generalization_bound(2, 2, &mut v), SL_OK);
        assert!((v - 9.9843).abs() < 5e-5);
        assert_eq!(sl_generalization_bound(3, 2, &mut v), SL_UNSUPPORTED);
        assert_eq!(sl_exact_delta(0, 1, 2, &mut v), SL_INVALID_ARGUMENT);
    }
}

#[test]
fn svm_two_point_problem() {
    let gram = [1.0, 0.0, 0.0, 1.0];
    let labels = [1i8, -1];
    unsafe {
        let mut m = ptr::null_mut();
        assert_eq!(sl_svm_solve(gram.as_ptr(), labels.as_ptr(), 2, 1.0, 1e-3, &mut m), SL_OK);
        let mut alphas = [0.0; 2];
        let mut beta = 1.0;
        assert_eq!(sl_svm_coefficients(m, alphas.as_mut_ptr(), 2, &mut beta), SL_OK);
        assert!((alphas[0] - 1.0).abs() < 1e-9 && (alphas[1] - 1.0).abs() < 1e-9 && beta.abs() < 1e-9);
        let mut v = 0.0;
        assert_eq!(sl_svm_decision_value(m, [1.0, 0.0].as_ptr(), 2, &mut v), SL_OK);
        assert!(v > 0.0);
        assert_eq!(sl_svm_decision_value(m, [1.0].as_ptr(), 1, &mut v), SL_INVALID_ARGUMENT);
        sl_svm_free(m);

        let bad = [1.0, 0.5, 0.1, 1.0];
        let mut m = ptr::null_mut();
        assert_eq!(sl_svm_solve(bad.as_ptr(), labels.as_ptr(), 2, 1.0, 1e-3, &mut m), SL_INVALID_ARGUMENT);
        assert!(m.is_null());
    }
}

#[test]
fn meanest_exact_mode() {
    unsafe {
        let mut sep = Vec::new();
        let mut ent = Vec::new();
        for k in 0..4 {
            let (mut a, mut b) = (ptr::null_mut(), ptr::null_mut());
            assert_eq!(sl_state_sample(1, 2, 1, k, &mut a), SL_OK);
            assert_eq!(sl_state_sample(-1, 2, 2, k, &mut b), SL_OK);
            sep.push(a as *const SlState);
            ent.push(b as *const SlState);
        }
        let mut m = ptr::null_mut();
        assert_eq!(sl_meanest_train(sep.as_ptr(), ent.as_ptr(), 4, 0, SL_MODE_SINGLE_COPY, 3, &mut m), SL_OK);
        let (mut dpp, mut dmm) = (0.0, 0.0);
        assert_eq!(sl_meanest_deltas(m, &mut dpp, &mut dmm), SL_OK);
        assert!(dpp > 0.0 && dmm > 0.0);
        let mut score = 0.0;
        assert_eq!(sl_meanest_score(m, sep[0], 0, 4, &mut score), SL_OK);
        assert!(score.is_finite());
        let mut m2 = ptr::null_mut();
        assert_eq!(sl_meanest_train(sep.as_ptr(), ent.as_ptr(), 4, 1, SL_MODE_SINGLE_COPY, 3, &mut m2), SL_INVALID_ARGUMENT);
        assert_eq!(sl_meanest_train(sep.as_ptr(), ent.as_ptr(), 4, 8, 9, 3, &mut m2), SL_INVALID_ARGUMENT);
        sl_meanest_free(m);
        for s in sep.into_iter().chain(ent) {
            sl_state_free(s as *mut SlState);
        }
    }
}

#[test]
fn grid_json_returns_csv() {
    let cfg = CString::new(r#"{"dims":[2],"Ns":[4],"Ss":[16],"methods":["svm_swap"],"test_count":10,"trials":1}"#).unwrap();
    unsafe {
        let mut out = ptr::null_mut();
        assert_eq!(sl_run_grid_json(cfg.as_ptr(), &mut out), SL_OK);
        let csv = CStr::from_ptr(out).to_str().unwrap().to_owned();
        sl_string_free(out);
        assert_eq!(csv.lines().count(), 2);
        assert!(csv.starts_with("d,N,S,method"));
        let bad = CString::new(r#"{"dims":[]}"#).unwrap();
        assert_eq!(sl_run_grid_json(bad.as_ptr(), &mut out), SL_CONFIG);
        assert!(out.is_null());
    }
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/shotlearn.h")).unwrap();
    for name in [
        "sl_state_sample",
        "sl_state_free",
        "sl_svm_solve",
        "sl_meanest_train",
        "sl_run_grid_json",
        "sl_last_error_message",
        "SL_NON_CONVERGENCE",
        "typedef struct SlState SlState",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}
