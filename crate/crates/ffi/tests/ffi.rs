use std::ffi::CStr;
use std::ptr;

use arfima_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 256];
    unsafe {
        arfima_last_error_message(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

fn model(alpha: &[f64], beta: &[f64], d: f64) -> *mut ArfimaModel {
    let mut m = ptr::null_mut();
    let s = unsafe { arfima_model_new(alpha.as_ptr(), alpha.len(), beta.as_ptr(), beta.len(), d, &mut m) };
    assert_eq!(s, ArfimaStatus::Ok, "{}", last_error());
    m
}

#[test]
fn simulate_then_residuals_recovers_innovations() {
    let m = model(&[0.5], &[-0.3], 0.7);
    let n = 512;
    let mut y = vec![0.0; n];
    let mut eps = vec![0.0; n];
    let mut e = vec![0.0; n];
    unsafe {
        let s = arfima_simulate(m, 1.0, n, 42, ArfimaInnovation::Gaussian, y.as_mut_ptr(), eps.as_mut_ptr());
        assert_eq!(s, ArfimaStatus::Ok);
        assert_eq!(arfima_residuals(m, y.as_ptr(), n, e.as_mut_ptr()), ArfimaStatus::Ok);
        let mut obj = 0.0;
        assert_eq!(arfima_css_objective(m, y.as_ptr(), n, &mut obj), ArfimaStatus::Ok);
        let ss: f64 = eps.iter().map(|v| v * v).sum();
        assert!((obj - ss).abs() <= 1e-8 * ss);
        arfima_model_free(m);
    }
    for (a, b) in e.iter().zip(&eps) {
        assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn infeasible_model_reports_constraint() {
    let mut m = ptr::null_mut();
    let s = unsafe { arfima_model_new([0.5].as_ptr(), 1, [0.5].as_ptr(), 1, 0.0, &mut m) };
    assert_eq!(s, ArfimaStatus::Infeasible);
    assert!(m.is_null());
    assert!(last_error().contains("common zeros"));
}

#[test]
fn null_pointers_are_rejected() {
    unsafe {
        assert_eq!(arfima_model_new(ptr::null(), 1, ptr::null(), 0, 0.3, ptr::null_mut()), ArfimaStatus::NullPointer);
        let mut out = 0.0;
        assert_eq!(arfima_css_objective(ptr::null(), [1.0].as_ptr(), 1, &mut out), ArfimaStatus::NullPointer);
        arfima_model_free(ptr::null_mut());
        arfima_fit_free(ptr::null_mut());
    }
}

#[test]
fn error_message_truncates() {
    let mut m = ptr::null_mut();
    unsafe { arfima_model_new([1.5].as_ptr(), 1, ptr::null(), 0, 0.0, &mut m) };
    let mut buf = [0 as std::ffi::c_char; 8];
    let full = unsafe { arfima_last_error_message(buf.as_mut_ptr(), buf.len()) };
    assert!(full > 7);
    let s = unsafe { CStr::from_ptr(buf.as_ptr()) };
    assert_eq!(s.to_bytes().len(), 7);
}

#[test]
fn estimate_and_predict() {
    let truth = model(&[0.4], &[], 0.3);
    let n = 1000;
    let mut y = vec![0.0; n];
    unsafe {
        arfima_simulate(truth, 1.0, n, 7, ArfimaInnovation::Gaussian, y.as_mut_ptr(), ptr::null_mut());
        let mut fit = ptr::null_mut();
        assert_eq!(arfima_estimate_css(y.as_ptr(), n, 1, 0, ptr::null(), &mut fit), ArfimaStatus::Ok, "{}", last_error());
        let mut summary = ArfimaFitSummary::default();
        assert_eq!(arfima_fit_summary(fit, &mut summary), ArfimaStatus::Ok);
        assert_eq!((summary.p1, summary.p2), (1, 0));
        assert!((summary.d - 0.3).abs() < 0.2 && (summary.sigma2 - 1.0).abs() < 0.15);
        assert!(summary.converged);

        let mut est = ptr::null_mut();
        assert_eq!(arfima_fit_model(fit, &mut est), ArfimaStatus::Ok);
        let mut a = [0.0; 1];
        assert_eq!(arfima_model_coefficients(est, a.as_mut_ptr(), ptr::null_mut()), ArfimaStatus::Ok);
        assert!((a[0] - 0.4).abs() < 0.2);

        let mut rec = [0.0; 5];
        let mut closed = [0.0; 5];
        assert_eq!(arfima_predict(est, y.as_ptr(), n, 5, ArfimaPredictor::CssRecursive, rec.as_mut_ptr()), ArfimaStatus::Ok);
        assert_eq!(arfima_predict(est, y.as_ptr(), n, 5, ArfimaPredictor::CssClosedForm, closed.as_mut_ptr()), ArfimaStatus::Ok);
        for (x, z) in rec.iter().zip(&closed) {
            assert!((x - z).abs() <= 1e-8 * x.abs().max(1.0));
        }
        let mut ls = [0.0; 5];
        assert_eq!(arfima_predict_ls(y.as_ptr(), n, 2, 5, ls.as_mut_ptr()), ArfimaStatus::Ok);
        assert!(ls.iter().all(|v| v.is_finite()));

        arfima_model_free(est);
        arfima_fit_free(fit);
        arfima_model_free(truth);
    }
}

#[test]
fn short_series_is_insufficient_data() {
    let y = [1.0, 2.0, 3.0];
    let mut out = [0.0; 1];
    let s = unsafe { arfima_predict_ls(y.as_ptr(), y.len(), 3, 1, out.as_mut_ptr()) };
    assert_eq!(s, ArfimaStatus::InsufficientData);
}

#[test]
fn mspe_one_step_equals_parameter_count() {
    let m = model(&[0.5], &[-0.3], 0.3);
    let mut out = ArfimaMspe::default();
    unsafe {
        assert_eq!(arfima_mspe_decomposition(m, 1.0, 1, 0, &mut out), ArfimaStatus::Ok);
        arfima_model_free(m);
    }
    assert!((out.total_second_order - 3.0).abs() < 1e-5);
    assert!((out.sigma2_h - 1.0).abs() < 1e-12);
}

#[test]
fn version_and_header() {
    let v = unsafe { CStr::from_ptr(arfima_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/arfima.h")).unwrap();
    for name in ["arfima_model_new", "arfima_estimate_css", "arfima_mspe_decomposition", "ARFIMA_STATUS_OK"] {
        assert!(header.contains(name), "{name} missing from header");
    }
}
