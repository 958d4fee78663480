//! Conditional-sum-of-squares estimation over the compact space `Pi x D`.
//!
//! Starts are laid on a grid over `d`; at each grid value the AR part is
//! initialised by least squares on the fractionally differenced series. The
//! best starts are refined with a projected quasi-Newton method driven by the
//! analytic gradient `grad S_n = 2 sum eps_t grad eps_t`.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arfima::{arma_residuals, score_series, ArfimaParams, ParamSpace};
use crate::error::{ArfimaError, Result};
use crate::fracdiff::frac_diff_raw;
use crate::optim::{self, Evaluation, Settings};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CssConfig {
    /// Number of grid values of `d` used as starts.
    pub starts_d: usize,
    pub max_iter: usize,
    /// Relative tolerance on the projected gradient norm.
    pub grad_tol: f64,
    /// How many of the best starts are refined by the local optimizer.
    pub local_starts: usize,
}

impl Default for CssConfig {
    fn default() -> Self {
        CssConfig { starts_d: 9, max_iter: 200, grad_tol: 1e-6, local_starts: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CssFit {
    pub estimate: ArfimaParams,
    pub objective_value: f64,
    /// `S_n(eta_hat) / n`.
    pub sigma2_hat: f64,
    pub n_starts: usize,
    pub converged: bool,
    pub boundary_flag: bool,
    pub gradient_norm: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
struct Candidate {
    eta: Vec<f64>,
    value: f64,
    converged: bool,
    blocked: bool,
    gradient_norm: f64,
    iterations: usize,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Smaller objective first, then smaller `||eta||`, then lexicographic.
fn candidate_order(a: &Candidate, b: &Candidate) -> Ordering {
    a.value
        .total_cmp(&b.value)
        .then_with(|| norm(&a.eta).total_cmp(&norm(&b.eta)))
        .then_with(|| {
            a.eta
                .iter()
                .zip(&b.eta)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| *o != Ordering::Equal)
                .unwrap_or(Ordering::Equal)
        })
}

fn feasible_params(space: &ParamSpace, eta: &[f64]) -> Option<ArfimaParams> {
    let p = ArfimaParams::from_eta(space.p1, space.p2, eta).ok()?;
    space.check(&p).ok().map(|_| p)
}

fn evaluate(y: &[f64], space: &ParamSpace, eta: &[f64]) -> Option<Evaluation> {
    let params = feasible_params(space, eta)?;
    let s = score_series(y, &params);
    let value: f64 = s.eps.iter().map(|e| e * e).sum();
    if !value.is_finite() {
        return None;
    }
    let k = s.cols.len();
    let gradient = DVector::from_fn(k, |i, _| {
        2.0 * s.cols[i].iter().zip(&s.eps).map(|(g, e)| g * e).sum::<f64>()
    });
    let mut gn = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in i..k {
            let v = 2.0 * s.cols[i].iter().zip(&s.cols[j]).map(|(a, b)| a * b).sum::<f64>();
            gn[(i, j)] = v;
            gn[(j, i)] = v;
        }
    }
    Some(Evaluation { value, gradient, curvature: Some(gn) })
}

/// Least-squares AR(p) coefficients of `v` with zero pre-sample values.
fn ar_least_squares(v: &[f64], p: usize) -> Option<Vec<f64>> {
    let n = v.len();
    let mut gram = DMatrix::<f64>::zeros(p, p);
    let mut rhs = DVector::<f64>::zeros(p);
    for t in 1..n {
        for i in 0..p {
            let xi = if t > i { v[t - i - 1] } else { 0.0 };
            if xi == 0.0 {
                continue;
            }
            rhs[i] += xi * v[t];
            for j in 0..p {
                let xj = if t > j { v[t - j - 1] } else { 0.0 };
                gram[(i, j)] += xi * xj;
            }
        }
    }
    let sol = gram.svd(true, true).solve(&rhs, 1e-12).ok()?;
    sol.iter().all(|x| x.is_finite()).then(|| sol.as_slice().to_vec())
}

/// Shrinks the short-memory coordinates toward zero until the point is feasible.
fn make_feasible(space: &ParamSpace, mut eta: Vec<f64>) -> Option<Vec<f64>> {
    let k = space.p1 + space.p2;
    for i in 0..k {
        eta[i] = eta[i].clamp(space.theta_lo[i], space.theta_hi[i]);
    }
    for _ in 0..40 {
        if feasible_params(space, &eta).is_some() {
            return Some(eta);
        }
        for v in eta.iter_mut().take(k) {
            *v *= 0.8;
        }
    }
    None
}

fn d_grid(space: &ParamSpace, count: usize) -> Vec<f64> {
    let count = count.max(1);
    let w = space.d_hi - space.d_lo;
    (0..count).map(|i| space.d_lo + w * (i as f64 + 1.0) / (count as f64 + 1.0)).collect()
}

fn start_points(y: &[f64], space: &ParamSpace, config: &CssConfig) -> Vec<Candidate> {
    let (p1, p2) = (space.p1, space.p2);
    let mut out = Vec::new();
    for d in d_grid(space, config.starts_d) {
        let v = frac_diff_raw(y, d);
        let alpha = if p1 > 0 {
            ar_least_squares(&v, p1).unwrap_or_else(|| vec![0.1; p1])
        } else {
            Vec::new()
        };
        let ma_options: Vec<Vec<f64>> = if p2 == 0 {
            vec![Vec::new()]
        } else {
            [1.0, -1.0].iter().map(|s| (1..=p2).map(|j| s * 0.3f64.powi(j as i32)).collect()).collect()
        };
        for beta in ma_options {
            let mut eta = alpha.clone();
            eta.extend(beta);
            eta.push(d);
            let Some(eta) = make_feasible(space, eta) else { continue };
            let params = ArfimaParams::from_eta(p1, p2, &eta).expect("dimension fixed above");
            let eps = arma_residuals(&v, &params.alpha, &params.beta);
            let value: f64 = eps.iter().map(|e| e * e).sum();
            if value.is_finite() {
                out.push(Candidate { eta, value, converged: false, blocked: false, gradient_norm: f64::NAN, iterations: 0 });
            }
        }
    }
    out
}

fn near_boundary(space: &ParamSpace, params: &ArfimaParams) -> bool {
    let eta = params.to_eta();
    let (lo, hi) = (space.lower(), space.upper());
    let on_box = eta
        .iter()
        .zip(lo.iter().zip(&hi))
        .any(|(v, (l, h))| (v - l).abs() <= 1e-6 * (h - l) || (h - v).abs() <= 1e-6 * (h - l));
    let near_unit = |r: f64| r >= 1.0 - 1e-6;
    on_box || near_unit(params.ar_poly().spectral_radius()) || near_unit(params.ma_poly().spectral_radius())
}

/// `eta_hat_n = argmin S_n(eta)` over `space`.
pub fn estimate_css(y: &[f64], space: &ParamSpace, config: &CssConfig) -> Result<CssFit> {
    let n = y.len();
    let required = space.p_bar() + 2;
    if n < required {
        return Err(ArfimaError::InsufficientData { n, required });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(ArfimaError::DegenerateData("series contains non-finite values".into()));
    }
    if y.iter().all(|v| *v == 0.0) {
        return Err(ArfimaError::DegenerateData("series is identically zero".into()));
    }

    let mut starts = start_points(y, space, config);
    if starts.is_empty() {
        return Err(ArfimaError::NoFeasibleStart);
    }
    let n_starts = starts.len();
    starts.sort_by(candidate_order);

    let settings = Settings { max_iter: config.max_iter, grad_tol: config.grad_tol };
    let (lo, hi) = (space.lower(), space.upper());
    let refined: Vec<Candidate> = starts
        .par_iter()
        .take(config.local_starts.max(1))
        .filter_map(|c| {
            optim::minimize(|eta| evaluate(y, space, eta), &c.eta, &lo, &hi, settings).map(|o| {
                Candidate {
                    eta: o.x,
                    value: o.value,
                    converged: o.converged,
                    blocked: o.blocked,
                    gradient_norm: o.projected_gradient_norm,
                    iterations: o.iterations,
                }
            })
        })
        .collect();

    let best = refined
        .into_iter()
        .chain(starts)
        .min_by(candidate_order)
        .expect("at least one start");
    let estimate = ArfimaParams::from_eta(space.p1, space.p2, &best.eta)?;
    let boundary_flag = near_boundary(space, &estimate) || (!best.converged && best.blocked);
    Ok(CssFit {
        objective_value: best.value,
        sigma2_hat: best.value / n as f64,
        n_starts,
        converged: best.converged,
        boundary_flag,
        gradient_norm: best.gradient_norm,
        iterations: best.iterations,
        estimate,
    })
}

/// `sqrt(n) (eta_hat - eta_0)`.
pub fn scaled_error(fit: &CssFit, truth: &ArfimaParams, n: usize) -> Result<Vec<f64>> {
    let a = fit.estimate.to_eta();
    let b = truth.to_eta();
    if fit.estimate.p1() != truth.p1() || fit.estimate.p2() != truth.p2() {
        return Err(ArfimaError::DimensionMismatch { expected: a.len(), got: b.len() });
    }
    let s = (n as f64).sqrt();
    Ok(a.iter().zip(&b).map(|(x, y)| s * (x - y)).collect())
}
