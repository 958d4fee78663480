//! h-step CSS predictors and the least-squares integrated-AR baseline.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::arfima::{arma_residuals, ArfimaParams};
use crate::error::{ArfimaError, Result};
use crate::fracdiff::{frac_coeffs_raw, frac_diff_raw};
use crate::lintime::{rational_expansion_raw, CompanionA, LagPoly};
use crate::series::causal_convolve;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForecastMethod {
    CssRecursive,
    CssClosedForm,
    Ls,
}

impl ForecastMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            ForecastMethod::CssRecursive => "css_recursive",
            ForecastMethod::CssClosedForm => "css_closed_form",
            ForecastMethod::Ls => "ls",
        }
    }
}

impl std::str::FromStr for ForecastMethod {
    type Err = ArfimaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "css_recursive" | "css" | "recursive" => Ok(ForecastMethod::CssRecursive),
            "css_closed_form" | "closed_form" => Ok(ForecastMethod::CssClosedForm),
            "ls" => Ok(ForecastMethod::Ls),
            other => Err(ArfimaError::InvalidParameter(format!("unknown method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastResult {
    pub horizon: usize,
    /// Predictions of `y_{n+1}..y_{n+h}`.
    pub point: Vec<f64>,
    pub method: ForecastMethod,
    /// Irreducible h-step variance `sigma^2 sum_{s<h} c_s^2`; plug-in unless
    /// replaced through [`ForecastResult::with_sigma2`].
    pub sigma2_h: f64,
    /// Weights `c_0..c_{h-1}` used for `sigma2_h`.
    pub psi: Vec<f64>,
}

impl ForecastResult {
    /// Recomputes `sigma2_h` for a known innovation variance.
    pub fn with_sigma2(mut self, sigma2: f64) -> Self {
        self.sigma2_h = sigma2 * self.psi.iter().map(|c| c * c).sum::<f64>();
        self
    }
}

/// `c_s(eta)`: coefficients of `A2(z) A1^{-1}(z) (1 - z)^{-d}`.
pub fn psi_weights(params: &ArfimaParams, length: usize) -> Vec<f64> {
    let arma = rational_expansion_raw(&params.ma_poly(), &params.ar_poly(), length);
    causal_convolve(&frac_coeffs_raw(-params.d, length), &arma)
}

fn check_inputs(y: &[f64], params: &ArfimaParams, h: usize) -> Result<()> {
    params.validate()?;
    if y.is_empty() {
        return Err(ArfimaError::InvalidParameter("series must be nonempty".into()));
    }
    if h == 0 {
        return Err(ArfimaError::InvalidParameter("horizon h must be >= 1".into()));
    }
    Ok(())
}

fn plug_in_variance(eps: &[f64]) -> f64 {
    eps.iter().map(|e| e * e).sum::<f64>() / eps.len() as f64
}

/// Iterates the one-step predictor `p_t(eta) = y_t - eps_t(eta)`, substituting
/// earlier forecasts for unobserved values (future innovations set to zero).
pub fn predict_css_recursive(y: &[f64], params: &ArfimaParams, h: usize) -> Result<ForecastResult> {
    check_inputs(y, params, h)?;
    let point = recursive_path(y, params, h);
    let n = y.len();
    let v = frac_diff_raw(y, params.d);
    let eps = arma_residuals(&v, &params.alpha, &params.beta);
    let psi = psi_weights(params, h);
    let sigma2_h = plug_in_variance(&eps[..n]) * psi.iter().map(|c| c * c).sum::<f64>();
    Ok(ForecastResult { horizon: h, point, method: ForecastMethod::CssRecursive, sigma2_h, psi })
}

pub(crate) fn recursive_path(y: &[f64], params: &ArfimaParams, h: usize) -> Vec<f64> {
    let n = y.len();
    let total = n + h;
    let pi = frac_coeffs_raw(params.d, total);
    let mut yext = y.to_vec();
    yext.resize(total, 0.0);
    let mut v = frac_diff_raw(y, params.d);
    let mut eps = arma_residuals(&v, &params.alpha, &params.beta);
    v.resize(total, 0.0);
    eps.resize(total, 0.0);
    for t in n..total {
        // sum_{k>=1} pi_k y_{t-k}
        let partial: f64 = (1..=t).map(|k| pi[k] * yext[t - k]).sum();
        let mut vt = 0.0;
        for (j, a) in params.alpha.iter().enumerate() {
            if t > j {
                vt += a * v[t - j - 1];
            }
        }
        for (j, b) in params.beta.iter().enumerate() {
            if t > j {
                vt -= b * eps[t - j - 1];
            }
        }
        v[t] = vt;
        yext[t] = vt - partial;
    }
    yext[n..].to_vec()
}

/// Closed-form `yhat_{n+h} = G_d(B) y_n + sum_{s<h} cbar_s(d) vhat_{n+h-s}`
/// with `vhat_{n+l} = -u_n' A^{l-1} theta`.
pub fn closed_form_value(y: &[f64], params: &ArfimaParams, h: usize) -> Result<f64> {
    check_inputs(y, params, h)?;
    Ok(closed_form_raw(y, params, h))
}

fn closed_form_raw(y: &[f64], params: &ArfimaParams, h: usize) -> f64 {
    let n = y.len();
    let d = params.d;
    let pi = frac_coeffs_raw(d, n);
    let cbar = frac_coeffs_raw(-d, n + h);

    // Coefficients of G_d(z) = (1 - z)^d sum_{k>=h} cbar_k z^{k-h}, lags 0..n-1.
    let tail = &cbar[h..];
    let g = causal_convolve(&pi, &tail[..n]);
    let g_part: f64 = (0..n).map(|j| g[j] * y[n - 1 - j]).sum();

    let (p1, p2) = (params.p1(), params.p2());
    if p1 + p2 == 0 {
        return g_part;
    }
    let v = frac_diff_raw(y, d);
    let eps = arma_residuals(&v, &params.alpha, &params.beta);
    let back = |x: &[f64], lag: usize| if lag < n { x[n - 1 - lag] } else { 0.0 };
    let mut u = Vec::with_capacity(p1 + p2);
    u.extend((0..p1).map(|j| -back(&v, j)));
    u.extend((0..p2).map(|j| back(&eps, j)));
    let u = DVector::from_vec(u);
    let a = CompanionA::new(&params.alpha, &params.beta);
    let mut w = DVector::from_iterator(p1 + p2, params.alpha.iter().chain(&params.beta).copied());
    // vhat[l-1] = vhat_{n+l}
    let mut vhat = Vec::with_capacity(h);
    for _ in 0..h {
        vhat.push(-u.dot(&w));
        w = a.matrix() * w;
    }
    let v_part: f64 = (0..h).map(|s| cbar[s] * vhat[h - s - 1]).sum();
    g_part + v_part
}

/// Closed-form predictions for horizons `1..=h`, one evaluation per horizon.
pub fn predict_css_closed_form(y: &[f64], params: &ArfimaParams, h: usize) -> Result<ForecastResult> {
    check_inputs(y, params, h)?;
    let point: Vec<f64> = (1..=h).map(|l| closed_form_raw(y, params, l)).collect();
    let v = frac_diff_raw(y, params.d);
    let eps = arma_residuals(&v, &params.alpha, &params.beta);
    let psi = psi_weights(params, h);
    let sigma2_h = plug_in_variance(&eps) * psi.iter().map(|c| c * c).sum::<f64>();
    Ok(ForecastResult { horizon: h, point, method: ForecastMethod::CssClosedForm, sigma2_h, psi })
}

/// Least-squares AR(p1) fit in levels: solves
/// `sum_{t=p1}^{n-1} y_t(p1) y_t(p1)' a = sum_{t=p1}^{n-1} y_t(p1) y_{t+1}`
/// through an SVD of the regressor matrix, truncating directions whose Gram
/// eigenvalue is below `1e-12` of the largest.
pub fn fit_ls_ar(y: &[f64], p1: usize) -> Result<Vec<f64>> {
    let n = y.len();
    if p1 == 0 {
        return Err(ArfimaError::InvalidParameter("p1 must be >= 1".into()));
    }
    if n <= 2 * p1 {
        return Err(ArfimaError::InsufficientData { n, required: 2 * p1 + 1 });
    }
    let rows = n - p1;
    let x = DMatrix::from_fn(rows, p1, |r, j| y[p1 - 1 + r - j]);
    let target = DVector::from_fn(rows, |r, _| y[p1 + r]);
    let svd = x.svd(true, true);
    let smax = svd.singular_values.max();
    if !(smax > 0.0) || !smax.is_finite() {
        return Err(ArfimaError::DegenerateData("regressor matrix is zero".into()));
    }
    let sol = svd
        .solve(&target, smax * 1e-6)
        .map_err(|e| ArfimaError::DegenerateData(e.to_string()))?;
    if sol.iter().any(|v| !v.is_finite()) {
        return Err(ArfimaError::DegenerateData("least-squares solution is not finite".into()));
    }
    Ok(sol.as_slice().to_vec())
}

/// Plug-in forecasts from the fitted AR(p1): `ytilde_{n+1} = y_n(p1)' a`, iterated.
pub fn predict_ls_integrated_ar(y: &[f64], p1: usize, h: usize) -> Result<ForecastResult> {
    if h == 0 {
        return Err(ArfimaError::InvalidParameter("horizon h must be >= 1".into()));
    }
    let coef = fit_ls_ar(y, p1)?;
    let point = ar_iterate(y, &coef, h);
    let n = y.len();
    let resid: Vec<f64> = (p1..n)
        .map(|t| y[t] - (0..p1).map(|j| coef[j] * y[t - 1 - j]).sum::<f64>())
        .collect();
    let psi = rational_expansion_raw(&LagPoly::one(), &LagPoly::new(coef), h);
    let sigma2_h = plug_in_variance(&resid) * psi.iter().map(|c| c * c).sum::<f64>();
    Ok(ForecastResult { horizon: h, point, method: ForecastMethod::Ls, sigma2_h, psi })
}

pub(crate) fn ar_iterate(y: &[f64], coef: &[f64], h: usize) -> Vec<f64> {
    let n = y.len();
    let mut ext = y.to_vec();
    for t in n..n + h {
        let v: f64 = coef.iter().enumerate().map(|(j, a)| if t > j { a * ext[t - 1 - j] } else { 0.0 }).sum();
        ext.push(v);
    }
    ext[n..].to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arfima::{residuals, simulate, Innovation};

    #[test]
    fn random_walk_is_flat() {
        let (y, _) = simulate(&ArfimaParams::fractional(1.0), 1.0, 50, 1, Innovation::Gaussian).unwrap();
        let f = predict_css_recursive(&y, &ArfimaParams::fractional(1.0), 5).unwrap();
        for p in &f.point {
            assert!((p - y[49]).abs() < 1e-10);
        }
        let c = predict_css_closed_form(&y, &ArfimaParams::fractional(1.0), 5).unwrap();
        for p in &c.point {
            assert!((p - y[49]).abs() < 1e-10);
        }
    }

    #[test]
    fn ar1_geometric_decay() {
        let p = ArfimaParams::new(vec![0.6], vec![], 0.0);
        let (y, _) = simulate(&p, 1.0, 30, 2, Innovation::Gaussian).unwrap();
        let f = predict_css_recursive(&y, &p, 4).unwrap();
        for (l, v) in f.point.iter().enumerate() {
            assert!((v - 0.6f64.powi(l as i32 + 1) * y[29]).abs() < 1e-12);
        }
    }

    #[test]
    fn pure_fractional_one_step() {
        let mut y = vec![0.0; 8];
        y[0] = 1.0;
        let p = ArfimaParams::fractional(0.4);
        let pi = frac_coeffs_raw(0.4, 9);
        let f = predict_css_recursive(&y, &p, 2).unwrap();
        assert!((f.point[0] + pi[8]).abs() < 1e-15);
        // two steps: yhat_10 = -(pi_1 yhat_9 + pi_9 y_1)
        assert!((f.point[1] - (-(pi[1] * f.point[0]) - frac_coeffs_raw(0.4, 10)[9])).abs() < 1e-15);
    }

    #[test]
    fn one_step_error_is_the_residual() {
        let p = ArfimaParams::new(vec![0.3], vec![0.4], 0.45);
        let (y, _) = simulate(&p, 1.0, 120, 7, Innovation::Gaussian).unwrap();
        let f = predict_css_recursive(&y[..119], &p, 1).unwrap();
        let eps = residuals(&y, &p).unwrap();
        assert!((y[119] - f.point[0] - eps[119]).abs() < 1e-10);
    }

    #[test]
    fn closed_form_matches_recursive() {
        let cases = [
            ArfimaParams::new(vec![0.5, -0.2], vec![0.4], 0.35),
            ArfimaParams::new(vec![], vec![-0.6, 0.2], 1.2),
            ArfimaParams::new(vec![0.9], vec![], -0.3),
            ArfimaParams::new(vec![-0.5], vec![], 2.0),
        ];
        for p in cases {
            let (y, _) = simulate(&p, 1.0, 200, 3, Innovation::Gaussian).unwrap();
            let r = predict_css_recursive(&y, &p, 12).unwrap();
            let c = predict_css_closed_form(&y, &p, 12).unwrap();
            let scale = y.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            for (a, b) in r.point.iter().zip(&c.point) {
                assert!((a - b).abs() <= 1e-8 * scale.max(1.0), "{p:?}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn predictors_ignore_future_data() {
        let p = ArfimaParams::new(vec![0.2], vec![0.1], 0.6);
        let (y, _) = simulate(&p, 1.0, 80, 4, Innovation::Gaussian).unwrap();
        let mut garbage = y.values()[..60].to_vec();
        garbage.extend([1e6, -3.0, 42.0]);
        let a = predict_css_recursive(&y[..60], &p, 3).unwrap();
        let b = predict_css_recursive(&garbage[..60], &p, 3).unwrap();
        assert_eq!(a.point, b.point);
        let a = predict_ls_integrated_ar(&y[..60], 2, 3).unwrap();
        let b = predict_ls_integrated_ar(&garbage[..60], 2, 3).unwrap();
        assert_eq!(a.point, b.point);
    }

    #[test]
    fn ls_consistency_on_ar1() {
        let p = ArfimaParams::new(vec![0.5], vec![], 0.0);
        let (y, _) = simulate(&p, 1.0, 5000, 10, Innovation::Gaussian).unwrap();
        let a = fit_ls_ar(&y, 3).unwrap();
        assert!((a[0] - 0.5).abs() < 0.03 && a[1].abs() < 0.03 && a[2].abs() < 0.03, "{a:?}");
    }

    #[test]
    fn ls_ramp() {
        let y: Vec<f64> = (1..=50).map(|v| v as f64).collect();
        let a = fit_ls_ar(&y, 1).unwrap();
        assert!((a[0] - 1.0).abs() < 0.05);
        let f = predict_ls_integrated_ar(&y, 1, 1).unwrap();
        assert!((f.point[0] - 50.0 * a[0]).abs() < 1e-9);
    }

    #[test]
    fn ls_normal_equations_hold() {
        let p = ArfimaParams::new(vec![0.25, 0.0], vec![], 1.0);
        let p = ArfimaParams::new(vec![0.0, 0.25], vec![], p.d);
        let (y, _) = simulate(&p, 1.0, 500, 5, Innovation::Gaussian).unwrap();
        let k = 3;
        let a = fit_ls_ar(&y, k).unwrap();
        let n = y.len();
        let mut resid_dot = vec![0.0; k];
        let mut scale = 0.0f64;
        for t in (k - 1)..(n - 1) {
            let pred: f64 = (0..k).map(|j| a[j] * y[t - j]).sum();
            for i in 0..k {
                resid_dot[i] += y[t - i] * (y[t + 1] - pred);
                scale = scale.max((y[t - i] * y[t + 1]).abs());
            }
        }
        for r in resid_dot {
            assert!(r.abs() <= 1e-6 * scale * n as f64);
        }
    }

    #[test]
    fn ls_guards() {
        assert!(matches!(fit_ls_ar(&[1.0, 2.0, 3.0], 2), Err(ArfimaError::InsufficientData { .. })));
        assert!(matches!(fit_ls_ar(&[0.0; 10], 2), Err(ArfimaError::DegenerateData(_))));
        assert!(predict_ls_integrated_ar(&[1.0; 10], 1, 0).is_err());
    }

    #[test]
    fn psi_weights_of_random_walk() {
        assert_eq!(psi_weights(&ArfimaParams::fractional(1.0), 4), vec![1.0; 4]);
        let f = predict_css_recursive(&[1.0, 2.0], &ArfimaParams::fractional(1.0), 3)
            .unwrap()
            .with_sigma2(2.0);
        assert!((f.sigma2_h - 6.0).abs() < 1e-12);
    }
}
