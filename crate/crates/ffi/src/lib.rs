//! C ABI for the `arfima` crate.
//!
//! Every function returns an [`ArfimaStatus`]; on failure a message is stored
//! per thread and can be copied out with [`arfima_last_error_message`]. Models
//! and fits are opaque handles released with their `_free` function. Output
//! arrays are caller-allocated.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use arfima::arfima::{css_objective, residuals, simulate, ArfimaParams, Innovation, ParamSpace};
use arfima::asymptotics::{mspe_decomposition, DEFAULT_TRUNCATION};
use arfima::css::{estimate_css, CssConfig, CssFit};
use arfima::error::ArfimaError;
use arfima::forecast::{predict_css_closed_form, predict_css_recursive, predict_ls_integrated_ar};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArfimaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    Infeasible = 3,
    DimensionMismatch = 4,
    DegenerateData = 5,
    InsufficientData = 6,
    NoFeasibleStart = 7,
    Domain = 8,
    Internal = 9,
}

/// Innovation distribution for [`arfima_simulate`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArfimaInnovation {
    Gaussian = 0,
    Uniform = 1,
}

/// Point predictor for [`arfima_predict`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArfimaPredictor {
    CssRecursive = 0,
    CssClosedForm = 1,
}

/// Opaque ARFIMA(p1, d, p2) parameter set.
pub struct ArfimaModel(ArfimaParams);

/// Opaque CSS fit result.
pub struct ArfimaFit(CssFit);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct ArfimaFitSummary {
    pub p1: usize,
    pub p2: usize,
    pub d: f64,
    pub sigma2: f64,
    pub objective: f64,
    pub converged: bool,
    pub boundary: bool,
    pub iterations: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct ArfimaMspe {
    pub h: usize,
    pub sigma2_h: f64,
    pub f: f64,
    pub g: f64,
    pub j: f64,
    pub total_second_order: f64,
    pub truncation_warning: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct ArfimaCssOptions {
    pub d_lo: f64,
    pub d_hi: f64,
    pub starts_d: usize,
    pub max_iter: usize,
    pub grad_tol: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(err: &ArfimaError) -> ArfimaStatus {
    match err {
        ArfimaError::InvalidParameter(_) | ArfimaError::EmptyGrid | ArfimaError::Config(_) => {
            ArfimaStatus::InvalidParameter
        }
        ArfimaError::Infeasible(_) => ArfimaStatus::Infeasible,
        ArfimaError::DimensionMismatch { .. } => ArfimaStatus::DimensionMismatch,
        ArfimaError::DegenerateData(_) | ArfimaError::Io(_) | ArfimaError::Csv(_) => ArfimaStatus::DegenerateData,
        ArfimaError::InsufficientData { .. } => ArfimaStatus::InsufficientData,
        ArfimaError::NoFeasibleStart => ArfimaStatus::NoFeasibleStart,
        ArfimaError::Domain(_) => ArfimaStatus::Domain,
    }
}

struct Fail(ArfimaStatus, String);

impl From<ArfimaError> for Fail {
    fn from(e: ArfimaError) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(ArfimaStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> ArfimaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            ArfimaStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            ArfimaStatus::Internal
        }
    }
}

unsafe fn input<'a>(ptr: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(ptr, len))
}

unsafe fn output<'a>(ptr: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts_mut(ptr, len))
}

unsafe fn model_ref<'a>(model: *const ArfimaModel) -> Result<&'a ArfimaParams, Fail> {
    model.as_ref().map(|m| &m.0).ok_or_else(|| null("model"))
}

/// Copies the calling thread's last error message into `buf` as a
/// NUL-terminated string, truncating to `len - 1` bytes. Returns the full
/// message length in bytes (without the terminator).
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn arfima_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn arfima_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(s) => s,
        Err(_) => panic!("version string"),
    };
    VERSION.as_ptr()
}

/// Creates a model from AR coefficients `alpha[0..p1]`, MA coefficients
/// `beta[0..p2]` and memory parameter `d`, after checking the model
/// constraints.
///
/// # Safety
/// `alpha`/`beta` must point to `p1`/`p2` readable doubles (may be null when
/// the count is 0); `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn arfima_model_new(
    alpha: *const f64,
    p1: usize,
    beta: *const f64,
    p2: usize,
    d: f64,
    out: *mut *mut ArfimaModel,
) -> ArfimaStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let params = ArfimaParams::new(input(alpha, p1, "alpha")?.to_vec(), input(beta, p2, "beta")?.to_vec(), d);
        params.validate()?;
        *out = Box::into_raw(Box::new(ArfimaModel(params)));
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn arfima_model_free(model: *mut ArfimaModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Writes the model's orders and memory parameter. Any pointer may be null.
///
/// # Safety
/// `model` must be a live handle; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn arfima_model_orders(
    model: *const ArfimaModel,
    p1: *mut usize,
    p2: *mut usize,
    d: *mut f64,
) -> ArfimaStatus {
    guard(|| {
        let m = model_ref(model)?;
        if let Some(p) = p1.as_mut() {
            *p = m.p1();
        }
        if let Some(p) = p2.as_mut() {
            *p = m.p2();
        }
        if let Some(p) = d.as_mut() {
            *p = m.d;
        }
        Ok(())
    })
}

/// Copies the AR and MA coefficients into `alpha[0..p1]` and `beta[0..p2]`.
///
/// # Safety
/// `model` must be a live handle; outputs must hold `p1`/`p2` doubles.
#[no_mangle]
pub unsafe extern "C" fn arfima_model_coefficients(
    model: *const ArfimaModel,
    alpha: *mut f64,
    beta: *mut f64,
) -> ArfimaStatus {
    guard(|| {
        let m = model_ref(model)?;
        output(alpha, m.p1(), "alpha")?.copy_from_slice(&m.alpha);
        output(beta, m.p2(), "beta")?.copy_from_slice(&m.beta);
        Ok(())
    })
}

/// Simulates `n` observations with zero initial conditions. `eps_out` may be
/// null; otherwise it receives the innovations.
///
/// # Safety
/// `model` must be a live handle; `y_out` (and `eps_out` if non-null) must
/// hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn arfima_simulate(
    model: *const ArfimaModel,
    sigma: f64,
    n: usize,
    seed: u64,
    innovation: ArfimaInnovation,
    y_out: *mut f64,
    eps_out: *mut f64,
) -> ArfimaStatus {
    guard(|| {
        let m = model_ref(model)?;
        let innovation = match innovation {
            ArfimaInnovation::Gaussian => Innovation::Gaussian,
            ArfimaInnovation::Uniform => Innovation::Uniform,
        };
        let (y, eps) = simulate(m, sigma, n, seed, innovation)?;
        output(y_out, n, "y_out")?.copy_from_slice(y.values());
        if !eps_out.is_null() {
            output(eps_out, n, "eps_out")?.copy_from_slice(&eps);
        }
        Ok(())
    })
}

/// Residuals of `y[0..n]` under the model, written to `out[0..n]`.
///
/// # Safety
/// `model` must be a live handle; `y` and `out` must hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn arfima_residuals(
    model: *const ArfimaModel,
    y: *const f64,
    n: usize,
    out: *mut f64,
) -> ArfimaStatus {
    guard(|| {
        let m = model_ref(model)?;
        let e = residuals(input(y, n, "y")?, m)?;
        output(out, n, "out")?.copy_from_slice(&e);
        Ok(())
    })
}

/// Sum of squared residuals of `y[0..n]` under the model.
///
/// # Safety
/// `model` must be a live handle; `y` must hold `n` doubles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn arfima_css_objective(
    model: *const ArfimaModel,
    y: *const f64,
    n: usize,
    out: *mut f64,
) -> ArfimaStatus {
    guard(|| {
        let m = model_ref(model)?;
        let v = css_objective(input(y, n, "y")?, m)?;
        *out.as_mut().ok_or_else(|| null("out"))? = v;
        Ok(())
    })
}

/// Default CSS options: d in [-1, 3] and the library's optimizer defaults.
#[no_mangle]
pub extern "C" fn arfima_css_options_default() -> ArfimaCssOptions {
    let c = CssConfig::default();
    ArfimaCssOptions {
        d_lo: ParamSpace::DEFAULT_D_LO,
        d_hi: ParamSpace::DEFAULT_D_HI,
        starts_d: c.starts_d,
        max_iter: c.max_iter,
        grad_tol: c.grad_tol,
    }
}

/// Fits an ARFIMA(p1, d, p2) model to `y[0..n]` by conditional sum of
/// squares. `options` may be null for defaults.
///
/// # Safety
/// `y` must hold `n` doubles; `options` null or valid; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn arfima_estimate_css(
    y: *const f64,
    n: usize,
    p1: usize,
    p2: usize,
    options: *const ArfimaCssOptions,
    out: *mut *mut ArfimaFit,
) -> ArfimaStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let o = options.as_ref().copied().unwrap_or_else(|| arfima_css_options_default());
        let space = ParamSpace::new(p1, p2, o.d_lo, o.d_hi)?;
        let config = CssConfig { starts_d: o.starts_d, max_iter: o.max_iter, grad_tol: o.grad_tol, ..CssConfig::default() };
        let fit = estimate_css(input(y, n, "y")?, &space, &config)?;
        *out = Box::into_raw(Box::new(ArfimaFit(fit)));
        Ok(())
    })
}

/// # Safety
/// `fit` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn arfima_fit_free(fit: *mut ArfimaFit) {
    if !fit.is_null() {
        drop(Box::from_raw(fit));
    }
}

/// # Safety
/// `fit` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn arfima_fit_summary(fit: *const ArfimaFit, out: *mut ArfimaFitSummary) -> ArfimaStatus {
    guard(|| {
        let f = &fit.as_ref().ok_or_else(|| null("fit"))?.0;
        *out.as_mut().ok_or_else(|| null("out"))? = ArfimaFitSummary {
            p1: f.estimate.p1(),
            p2: f.estimate.p2(),
            d: f.estimate.d,
            sigma2: f.sigma2_hat,
            objective: f.objective_value,
            converged: f.converged,
            boundary: f.boundary_flag,
            iterations: f.iterations,
        };
        Ok(())
    })
}

/// Returns the fitted parameters as a new model handle owned by the caller.
///
/// # Safety
/// `fit` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn arfima_fit_model(fit: *const ArfimaFit, out: *mut *mut ArfimaModel) -> ArfimaStatus {
    guard(|| {
        let f = &fit.as_ref().ok_or_else(|| null("fit"))?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = Box::into_raw(Box::new(ArfimaModel(f.estimate.clone())));
        Ok(())
    })
}

/// Predicts `y_{n+1}..y_{n+h}` from `y[0..n]` with the model's coefficients.
///
/// # Safety
/// `model` must be a live handle; `y` holds `n` doubles, `out` holds `h`.
#[no_mangle]
pub unsafe extern "C" fn arfima_predict(
    model: *const ArfimaModel,
    y: *const f64,
    n: usize,
    h: usize,
    method: ArfimaPredictor,
    out: *mut f64,
) -> ArfimaStatus {
    guard(|| {
        let m = model_ref(model)?;
        let y = input(y, n, "y")?;
        let r = match method {
            ArfimaPredictor::CssRecursive => predict_css_recursive(y, m, h)?,
            ArfimaPredictor::CssClosedForm => predict_css_closed_form(y, m, h)?,
        };
        output(out, h, "out")?.copy_from_slice(&r.point);
        Ok(())
    })
}

/// Least-squares integrated AR(p1) forecasts of `y_{n+1}..y_{n+h}`.
///
/// # Safety
/// `y` holds `n` doubles, `out` holds `h`.
#[no_mangle]
pub unsafe extern "C" fn arfima_predict_ls(
    y: *const f64,
    n: usize,
    p1: usize,
    h: usize,
    out: *mut f64,
) -> ArfimaStatus {
    guard(|| {
        let r = predict_ls_integrated_ar(input(y, n, "y")?, p1, h)?;
        output(out, h, "out")?.copy_from_slice(&r.point);
        Ok(())
    })
}

/// Second-order MSPE decomposition at horizon `h` for the true model.
/// `truncation` 0 selects the library default.
///
/// # Safety
/// `model` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn arfima_mspe_decomposition(
    model: *const ArfimaModel,
    sigma2: f64,
    h: usize,
    truncation: usize,
    out: *mut ArfimaMspe,
) -> ArfimaStatus {
    guard(|| {
        let m = model_ref(model)?;
        let t = if truncation == 0 { DEFAULT_TRUNCATION } else { truncation };
        let r = mspe_decomposition(m, sigma2, h, t)?;
        *out.as_mut().ok_or_else(|| null("out"))? = ArfimaMspe {
            h: r.h,
            sigma2_h: r.sigma2_h,
            f: r.f,
            g: r.g,
            j: r.j,
            total_second_order: r.total_second_order,
            truncation_warning: r.truncation_warning,
        };
        Ok(())
    })
}
