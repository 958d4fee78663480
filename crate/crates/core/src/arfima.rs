//! The ARFIMA(p1, d, p2) model under zero initial conditions: parameters,
//! simulation, the residual filter `eps_t(eta)` and its analytic derivatives.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{ArfimaError, Constraint, Result};
use crate::fracdiff::{frac_coeffs_raw, frac_diff_raw, log_filter_coeffs, log_filter_raw};
use crate::lintime::{divide_series, multiply_series, share_root, LagPoly};
use crate::series::{causal_convolve, Series};

/// `eta = (alpha_1..alpha_p1, beta_1..beta_p2, d)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArfimaParams {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub d: f64,
}

impl ArfimaParams {
    pub fn new(alpha: Vec<f64>, beta: Vec<f64>, d: f64) -> Self {
        ArfimaParams { alpha, beta, d }
    }

    /// Pure fractional noise `(1 - B)^d y_t = eps_t`.
    pub fn fractional(d: f64) -> Self {
        ArfimaParams { alpha: Vec::new(), beta: Vec::new(), d }
    }

    pub fn p1(&self) -> usize {
        self.alpha.len()
    }

    pub fn p2(&self) -> usize {
        self.beta.len()
    }

    /// Number of parameters `p1 + p2 + 1`.
    pub fn p_bar(&self) -> usize {
        self.alpha.len() + self.beta.len() + 1
    }

    pub fn ar_poly(&self) -> LagPoly {
        LagPoly::new(self.alpha.clone())
    }

    pub fn ma_poly(&self) -> LagPoly {
        LagPoly::new(self.beta.clone())
    }

    pub fn to_eta(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.p_bar());
        v.extend_from_slice(&self.alpha);
        v.extend_from_slice(&self.beta);
        v.push(self.d);
        v
    }

    pub fn from_eta(p1: usize, p2: usize, eta: &[f64]) -> Result<Self> {
        if eta.len() != p1 + p2 + 1 {
            return Err(ArfimaError::DimensionMismatch { expected: p1 + p2 + 1, got: eta.len() });
        }
        Ok(ArfimaParams {
            alpha: eta[..p1].to_vec(),
            beta: eta[p1..p1 + p2].to_vec(),
            d: eta[p1 + p2],
        })
    }

    /// Checks stationarity/invertibility of the short-memory part, absence of
    /// common zeros and the leading-coefficient condition.
    pub fn validate(&self) -> Result<()> {
        if !self.d.is_finite() || self.alpha.iter().chain(&self.beta).any(|v| !v.is_finite()) {
            return Err(ArfimaError::InvalidParameter("parameters must be finite".into()));
        }
        let ar = self.ar_poly();
        let ma = self.ma_poly();
        if !ar.is_stable() {
            return Err(ArfimaError::Infeasible(Constraint::ArStability));
        }
        if !ma.is_stable() {
            return Err(ArfimaError::Infeasible(Constraint::MaStability));
        }
        if self.p1() + self.p2() > 0 {
            let lead_a = self.alpha.last().copied().unwrap_or(0.0);
            let lead_b = self.beta.last().copied().unwrap_or(0.0);
            if lead_a.abs() + lead_b.abs() == 0.0 {
                return Err(ArfimaError::Infeasible(Constraint::LeadingCoefficients));
            }
        }
        if self.p1() > 0 && self.p2() > 0 && share_root(&ar, &ma) {
            return Err(ArfimaError::Infeasible(Constraint::CommonZeros));
        }
        Ok(())
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_ok()
    }

    pub fn is_feasible(&self, space: &ParamSpace) -> bool {
        space.check(self).is_ok()
    }
}

/// The compact box `Pi x D` intersected with the model constraints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpace {
    pub p1: usize,
    pub p2: usize,
    pub d_lo: f64,
    pub d_hi: f64,
    pub theta_lo: Vec<f64>,
    pub theta_hi: Vec<f64>,
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

impl ParamSpace {
    pub const DEFAULT_D_LO: f64 = -1.0;
    pub const DEFAULT_D_HI: f64 = 3.0;

    /// Box bounds default to `|c_j| <= C(p, j)`, which contains every stable
    /// polynomial of degree `p`.
    pub fn new(p1: usize, p2: usize, d_lo: f64, d_hi: f64) -> Result<Self> {
        let mut theta_lo = Vec::with_capacity(p1 + p2);
        let mut theta_hi = Vec::with_capacity(p1 + p2);
        for p in [p1, p2] {
            for j in 1..=p {
                let b = binomial(p, j);
                theta_lo.push(-b);
                theta_hi.push(b);
            }
        }
        let s = ParamSpace { p1, p2, d_lo, d_hi, theta_lo, theta_hi };
        s.validate()?;
        Ok(s)
    }

    pub fn with_default_d(p1: usize, p2: usize) -> Result<Self> {
        Self::new(p1, p2, Self::DEFAULT_D_LO, Self::DEFAULT_D_HI)
    }

    pub fn with_theta_box(mut self, lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        self.theta_lo = lo;
        self.theta_hi = hi;
        self.validate()?;
        Ok(self)
    }

    /// Same bounds `[lo, hi]` on every short-memory coordinate.
    pub fn with_uniform_theta_box(self, lo: f64, hi: f64) -> Result<Self> {
        let k = self.p1 + self.p2;
        self.with_theta_box(vec![lo; k], vec![hi; k])
    }

    pub fn p_bar(&self) -> usize {
        self.p1 + self.p2 + 1
    }

    fn validate(&self) -> Result<()> {
        if !(self.d_lo.is_finite() && self.d_hi.is_finite() && self.d_lo < self.d_hi) {
            return Err(ArfimaError::InvalidParameter(format!(
                "memory interval [{}, {}] must be finite with d_lo < d_hi",
                self.d_lo, self.d_hi
            )));
        }
        let k = self.p1 + self.p2;
        if self.theta_lo.len() != k || self.theta_hi.len() != k {
            return Err(ArfimaError::DimensionMismatch {
                expected: k,
                got: self.theta_lo.len().min(self.theta_hi.len()),
            });
        }
        if self.theta_lo.iter().zip(&self.theta_hi).any(|(l, h)| !(l < h)) {
            return Err(ArfimaError::InvalidParameter(
                "every coefficient box must satisfy lo < hi".into(),
            ));
        }
        Ok(())
    }

    /// Box membership plus [`ArfimaParams::validate`].
    pub fn check(&self, params: &ArfimaParams) -> Result<()> {
        if params.p1() != self.p1 || params.p2() != self.p2 {
            return Err(ArfimaError::DimensionMismatch {
                expected: self.p_bar(),
                got: params.p_bar(),
            });
        }
        if !(params.d >= self.d_lo && params.d <= self.d_hi) {
            return Err(ArfimaError::Infeasible(Constraint::MemoryRange));
        }
        let theta = params.alpha.iter().chain(&params.beta);
        for ((v, lo), hi) in theta.zip(&self.theta_lo).zip(&self.theta_hi) {
            if !(v >= lo && v <= hi) {
                return Err(ArfimaError::Infeasible(Constraint::ThetaBox));
            }
        }
        params.validate()
    }

    pub fn lower(&self) -> Vec<f64> {
        let mut v = self.theta_lo.clone();
        v.push(self.d_lo);
        v
    }

    pub fn upper(&self) -> Vec<f64> {
        let mut v = self.theta_hi.clone();
        v.push(self.d_hi);
        v
    }
}

/// Innovation distribution used by [`simulate`]; both have mean 0 and sd `sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Innovation {
    #[default]
    Gaussian,
    Uniform,
}

impl std::str::FromStr for Innovation {
    type Err = ArfimaError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(Innovation::Gaussian),
            "uniform" => Ok(Innovation::Uniform),
            other => Err(ArfimaError::InvalidParameter(format!("unknown innovation '{other}'"))),
        }
    }
}

pub fn draw_innovations(sigma: f64, n: usize, seed: u64, innovation: Innovation) -> Result<Vec<f64>> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(ArfimaError::InvalidParameter(format!("sigma = {sigma} must be positive")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eps = match innovation {
        Innovation::Gaussian => {
            let dist = Normal::new(0.0, sigma).expect("sigma checked above");
            (0..n).map(|_| dist.sample(&mut rng)).collect()
        }
        Innovation::Uniform => {
            let half = sigma * 3f64.sqrt();
            let dist = Uniform::new_inclusive(-half, half);
            (0..n).map(|_| dist.sample(&mut rng)).collect()
        }
    };
    Ok(eps)
}

/// Draws `n` innovations and runs them through the model filter.
pub fn simulate(
    params: &ArfimaParams,
    sigma: f64,
    n: usize,
    rng_seed: u64,
    innovation: Innovation,
) -> Result<(Series, Vec<f64>)> {
    params.validate()?;
    if n == 0 {
        return Err(ArfimaError::InvalidParameter("n must be >= 1".into()));
    }
    let eps = draw_innovations(sigma, n, rng_seed, innovation)?;
    let y = filter_innovations(params, &eps);
    Ok((Series::new(y)?, eps))
}

/// `y = (1 - B)^{-d} A1^{-1}(B) A2(B) eps` with zero initial conditions.
pub fn simulate_with_innovations(params: &ArfimaParams, eps: &[f64]) -> Result<Series> {
    params.validate()?;
    Series::new(filter_innovations(params, eps))
}

fn filter_innovations(params: &ArfimaParams, eps: &[f64]) -> Vec<f64> {
    let n = eps.len();
    let mut u = vec![0.0; n];
    for t in 0..n {
        let mut w = eps[t];
        for (j, b) in params.beta.iter().enumerate() {
            if t > j {
                w -= b * eps[t - j - 1];
            }
        }
        for (j, a) in params.alpha.iter().enumerate() {
            if t > j {
                w += a * u[t - j - 1];
            }
        }
        u[t] = w;
    }
    frac_diff_raw(&u, -params.d)
}

/// `x_t = v_t - sum alpha_j v_{t-j}` followed by the MA inversion
/// `eps_t = x_t + sum beta_j eps_{t-j}`.
pub(crate) fn arma_residuals(v: &[f64], alpha: &[f64], beta: &[f64]) -> Vec<f64> {
    let n = v.len();
    let mut eps = vec![0.0; n];
    for t in 0..n {
        let mut x = v[t];
        for (j, a) in alpha.iter().enumerate() {
            if t > j {
                x -= a * v[t - j - 1];
            }
        }
        for (j, b) in beta.iter().enumerate() {
            if t > j {
                x += b * eps[t - j - 1];
            }
        }
        eps[t] = x;
    }
    eps
}

/// `A2^{-1}(B) x`.
pub(crate) fn ma_invert(x: &[f64], beta: &[f64]) -> Vec<f64> {
    let mut out = x.to_vec();
    divide_series(&mut out, beta);
    out
}

pub(crate) fn residuals_raw(y: &[f64], params: &ArfimaParams) -> Vec<f64> {
    let v = frac_diff_raw(y, params.d);
    arma_residuals(&v, &params.alpha, &params.beta)
}

/// `eps_t(eta) = A1(B) A2^{-1}(B) (1 - B)^d y_t`, t = 1..n.
pub fn residuals(y: &[f64], params: &ArfimaParams) -> Result<Vec<f64>> {
    params.validate()?;
    if y.is_empty() {
        return Err(ArfimaError::InvalidParameter("series must be nonempty".into()));
    }
    Ok(residuals_raw(y, params))
}

/// `S_n(eta) = sum eps_t(eta)^2`.
pub fn css_objective(y: &[f64], params: &ArfimaParams) -> Result<f64> {
    Ok(residuals(y, params)?.iter().map(|e| e * e).sum())
}

/// Residuals and one derivative series per parameter: `cols[i][t] = d eps_t / d eta_i`.
pub(crate) struct ScoreSeries {
    pub v: Vec<f64>,
    pub eps: Vec<f64>,
    pub cols: Vec<Vec<f64>>,
}

fn shifted(x: &[f64], lag: usize) -> Vec<f64> {
    let n = x.len();
    let mut out = vec![0.0; n];
    if lag < n {
        out[lag..].copy_from_slice(&x[..n - lag]);
    }
    out
}

pub(crate) fn score_series(y: &[f64], params: &ArfimaParams) -> ScoreSeries {
    let v = frac_diff_raw(y, params.d);
    let eps = arma_residuals(&v, &params.alpha, &params.beta);
    let mut cols = Vec::with_capacity(params.p_bar());
    if params.p1() > 0 {
        let a = ma_invert(&v, &params.beta);
        for k in 1..=params.p1() {
            cols.push(shifted(&a, k).into_iter().map(|x| -x).collect());
        }
    }
    if params.p2() > 0 {
        let m = ma_invert(&eps, &params.beta);
        for j in 1..=params.p2() {
            cols.push(shifted(&m, j));
        }
    }
    cols.push(log_filter_raw(&eps));
    ScoreSeries { v, eps, cols }
}

/// Gradient rows and Hessian slices of `eps_t(eta)`, t = 1..n.
#[derive(Debug, Clone)]
pub struct DerivSeries {
    /// `n x p_bar`; row `t` is the gradient of `eps_t`.
    pub grad: DMatrix<f64>,
    /// One symmetric `p_bar x p_bar` matrix per time point.
    pub hess: Vec<DMatrix<f64>>,
}

impl DerivSeries {
    /// `grad S_n = 2 sum eps_t grad eps_t`.
    pub fn objective_gradient(&self, eps: &[f64]) -> Vec<f64> {
        let p = self.grad.ncols();
        (0..p)
            .map(|i| 2.0 * self.grad.column(i).iter().zip(eps).map(|(g, e)| g * e).sum::<f64>())
            .collect()
    }

    /// `hess S_n = 2 sum (grad eps_t grad eps_t' + eps_t hess eps_t)`.
    pub fn objective_hessian(&self, eps: &[f64]) -> DMatrix<f64> {
        let p = self.grad.ncols();
        let mut h = self.grad.transpose() * &self.grad;
        for (t, e) in eps.iter().enumerate() {
            h += &self.hess[t] * *e;
        }
        h *= 2.0;
        debug_assert_eq!(h.nrows(), p);
        h
    }
}

/// Analytic first and second derivatives of `eps_t(eta)` with respect to `eta`.
///
/// With `a = A2^{-1} v`, `m = A2^{-1} eps`, `a2 = A2^{-1} a`, `m2 = A2^{-1} m`
/// and `L = log(1 - B)`:
/// `d/d alpha_k = -a_{t-k}`, `d/d beta_j = m_{t-j}`, `d/d d = (L eps)_t`;
/// `d2/d alpha_k d beta_j = -a2_{t-k-j}`, `d2/d beta_i d beta_j = 2 m2_{t-i-j}`,
/// mixed `d` derivatives are `L` applied to the first-derivative series, and
/// `d2/d d2 = L L eps`.
pub fn residual_derivatives(y: &[f64], params: &ArfimaParams) -> Result<DerivSeries> {
    params.validate()?;
    if y.is_empty() {
        return Err(ArfimaError::InvalidParameter("series must be nonempty".into()));
    }
    let n = y.len();
    let (p1, p2) = (params.p1(), params.p2());
    let pb = params.p_bar();
    let s = score_series(y, params);
    let mut grad = DMatrix::zeros(n, pb);
    for (i, col) in s.cols.iter().enumerate() {
        for t in 0..n {
            grad[(t, i)] = col[t];
        }
    }

    let mut hess = vec![DMatrix::<f64>::zeros(pb, pb); n];
    let a = ma_invert(&s.v, &params.beta);
    let a2 = ma_invert(&a, &params.beta);
    let m = ma_invert(&s.eps, &params.beta);
    let m2 = ma_invert(&m, &params.beta);
    for k in 1..=p1 {
        for j in 1..=p2 {
            let (r, c) = (k - 1, p1 + j - 1);
            for t in (k + j)..n {
                let val = -a2[t - k - j];
                hess[t][(r, c)] = val;
                hess[t][(c, r)] = val;
            }
        }
    }
    for i in 1..=p2 {
        for j in 1..=p2 {
            let (r, c) = (p1 + i - 1, p1 + j - 1);
            for t in (i + j)..n {
                hess[t][(r, c)] = 2.0 * m2[t - i - j];
            }
        }
    }
    let dd = pb - 1;
    for i in 0..(p1 + p2) {
        let mixed = log_filter_raw(&s.cols[i]);
        for t in 0..n {
            hess[t][(i, dd)] = mixed[t];
            hess[t][(dd, i)] = mixed[t];
        }
    }
    let second = log_filter_raw(&s.cols[dd]);
    for t in 0..n {
        hess[t][(dd, dd)] = second[t];
    }
    Ok(DerivSeries { grad, hess })
}

/// Coefficients `b_s(eta)` of `eps_t(eta) = sum_s b_s(eta) eps_{t-s}` when the
/// data follow `truth`, i.e. of `(1-z)^{d-d0} A2_0 A1_0^{-1} A1 A2^{-1}`, and
/// their derivatives `b_{s,i} = d b_s / d eta_i` (a `length x p_bar` matrix).
pub fn b_series(
    params: &ArfimaParams,
    truth: &ArfimaParams,
    length: usize,
) -> Result<(Vec<f64>, DMatrix<f64>)> {
    params.validate()?;
    truth.validate()?;
    if params.p1() != truth.p1() || params.p2() != truth.p2() {
        return Err(ArfimaError::DimensionMismatch { expected: truth.p_bar(), got: params.p_bar() });
    }
    if length == 0 {
        return Err(ArfimaError::InvalidParameter("length must be >= 1".into()));
    }
    let (p1, p2) = (params.p1(), params.p2());
    let pb = params.p_bar();
    let delta = params.d - truth.d;
    let frac = (delta != 0.0).then(|| frac_coeffs_raw(delta, length));
    let with_frac = |x: Vec<f64>| match &frac {
        Some(f) => causal_convolve(f, &x),
        None => x,
    };

    // A2_0 / (A1_0 A2): shared factor of the short-memory derivatives.
    let mut impulse = vec![0.0; length];
    impulse[0] = 1.0;
    let mut base = multiply_series(&impulse, &truth.beta);
    divide_series(&mut base, &truth.alpha);
    divide_series(&mut base, &params.beta);

    // r = A2_0 A1 / (A1_0 A2)
    let r = multiply_series(&base, &params.alpha);
    let b = with_frac(r.clone());

    let mut grad = DMatrix::zeros(length, pb);
    if p1 > 0 {
        let g = with_frac(base.clone());
        for k in 1..=p1 {
            for s in k..length {
                grad[(s, k - 1)] = -g[s - k];
            }
        }
    }
    if p2 > 0 {
        let mut rb = r.clone();
        divide_series(&mut rb, &params.beta);
        let g = with_frac(rb);
        for j in 1..=p2 {
            for s in j..length {
                grad[(s, p1 + j - 1)] = g[s - j];
            }
        }
    }
    let bd = causal_convolve(&log_filter_coeffs(length), &b);
    for s in 0..length {
        grad[(s, pb - 1)] = bd[s];
    }
    Ok((b, grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn simulate_examples() {
        let wn = ArfimaParams::fractional(0.0);
        let (y, eps) = simulate(&wn, 1.0, 50, 3, Innovation::Gaussian).unwrap();
        assert_eq!(y.values(), &eps[..]);

        let rw = ArfimaParams::fractional(1.0);
        let y = simulate_with_innovations(&rw, &[1.0, 1.0, 1.0]).unwrap();
        close(y.values(), &[1.0, 2.0, 3.0], 1e-15);

        let ar = ArfimaParams::new(vec![0.5], vec![], 0.0);
        let y = simulate_with_innovations(&ar, &[1.0, 0.0, 0.0]).unwrap();
        close(y.values(), &[1.0, 0.5, 0.25], 1e-15);
    }

    #[test]
    fn simulate_rejects_bad_input() {
        let p = ArfimaParams::new(vec![1.1], vec![], 0.0);
        assert!(matches!(
            simulate(&p, 1.0, 10, 0, Innovation::Gaussian),
            Err(ArfimaError::Infeasible(Constraint::ArStability))
        ));
        let p = ArfimaParams::fractional(0.2);
        assert!(simulate(&p, 0.0, 10, 0, Innovation::Gaussian).is_err());
        assert!(simulate(&p, -1.0, 10, 0, Innovation::Gaussian).is_err());
    }

    #[test]
    fn simulation_is_seeded() {
        let p = ArfimaParams::new(vec![0.3], vec![-0.2], 0.4);
        let a = simulate(&p, 1.0, 100, 11, Innovation::Gaussian).unwrap();
        let b = simulate(&p, 1.0, 100, 11, Innovation::Gaussian).unwrap();
        let c = simulate(&p, 1.0, 100, 12, Innovation::Gaussian).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.0, c.0);
    }

    #[test]
    fn uniform_innovations_have_requested_scale() {
        let eps = draw_innovations(2.0, 20_000, 1, Innovation::Uniform).unwrap();
        let var = eps.iter().map(|e| e * e).sum::<f64>() / eps.len() as f64;
        assert!((var - 4.0).abs() < 0.15);
        assert!(eps.iter().all(|e| e.abs() <= 2.0 * 3f64.sqrt()));
    }

    #[test]
    fn residual_examples() {
        let y = [1.0, 0.0, 0.0];
        close(&residuals(&y, &ArfimaParams::fractional(0.0)).unwrap(), &y, 0.0);
        close(&residuals(&y, &ArfimaParams::fractional(0.3)).unwrap(), &[1.0, -0.3, -0.105], 1e-15);
        assert_eq!(css_objective(&[1.0, 2.0], &ArfimaParams::fractional(0.0)).unwrap(), 5.0);
        assert_eq!(css_objective(&[0.0; 4], &ArfimaParams::fractional(0.7)).unwrap(), 0.0);
    }

    #[test]
    fn residuals_invert_simulation() {
        let p = ArfimaParams::new(vec![0.5, -0.2], vec![0.4], 0.8);
        let (y, eps) = simulate(&p, 1.0, 2000, 5, Innovation::Gaussian).unwrap();
        let r = residuals(&y, &p).unwrap();
        close(&r, &eps, 1e-9);
    }

    #[test]
    fn feasibility_checks() {
        let space = ParamSpace::new(1, 1, -1.0, 3.0).unwrap();
        let ok = ArfimaParams::new(vec![0.5], vec![-0.3], 0.4);
        assert!(ok.is_feasible(&space));
        let common = ArfimaParams::new(vec![0.5], vec![0.5], 0.4);
        assert!(matches!(space.check(&common), Err(ArfimaError::Infeasible(Constraint::CommonZeros))));
        let zero_lead = ArfimaParams::new(vec![0.0], vec![0.0], 0.4);
        assert!(matches!(
            space.check(&zero_lead),
            Err(ArfimaError::Infeasible(Constraint::LeadingCoefficients))
        ));
        let far = ArfimaParams::new(vec![0.5], vec![-0.3], 3.5);
        assert!(matches!(space.check(&far), Err(ArfimaError::Infeasible(Constraint::MemoryRange))));
        let ma = ArfimaParams::new(vec![0.5], vec![1.3], 0.4);
        assert!(matches!(ma.validate(), Err(ArfimaError::Infeasible(Constraint::MaStability))));
        assert!(matches!(space.check(&ma), Err(ArfimaError::Infeasible(Constraint::ThetaBox))));
        assert!(ParamSpace::new(0, 0, 1.0, 1.0).is_err());
        assert!(ParamSpace::new(0, 0, f64::NEG_INFINITY, 1.0).is_err());
        assert!(ParamSpace::new(1, 0, 0.0, 1.0).unwrap().with_uniform_theta_box(1.0, -1.0).is_err());
    }

    #[test]
    fn first_gradient_row_vanishes() {
        let p = ArfimaParams::new(vec![0.4], vec![0.2], 0.3);
        let (y, _) = simulate(&p, 1.0, 64, 9, Innovation::Gaussian).unwrap();
        let ds = residual_derivatives(&y, &p).unwrap();
        for i in 0..p.p_bar() {
            assert_eq!(ds.grad[(0, i)], 0.0);
        }
    }

    #[test]
    fn pure_fractional_gradient_is_log_filter() {
        let p = ArfimaParams::fractional(0.35);
        let (y, _) = simulate(&p, 1.0, 40, 2, Innovation::Gaussian).unwrap();
        let ds = residual_derivatives(&y, &p).unwrap();
        let expected = log_filter_raw(&residuals(&y, &p).unwrap());
        close(ds.grad.column(0).as_slice(), &expected, 1e-14);
        let zero = residual_derivatives(&[0.0; 10], &ArfimaParams::new(vec![0.3], vec![0.1], 0.2))
            .unwrap();
        assert!(zero.grad.iter().all(|v| *v == 0.0));
        assert!(zero.hess.iter().all(|h| h.iter().all(|v| *v == 0.0)));
    }

    #[test]
    fn b_series_examples() {
        let truth = ArfimaParams::new(vec![0.5], vec![], 0.7);
        let (b, g) = b_series(&truth, &truth, 50).unwrap();
        assert!((b[0] - 1.0).abs() < 1e-15);
        assert!(b[1..].iter().all(|v| v.abs() < 1e-15));
        for s in 1..50 {
            assert!((g[(s, 0)] + 0.5f64.powi(s as i32 - 1)).abs() < 1e-14);
            assert!((g[(s, 1)] + 1.0 / s as f64).abs() < 1e-14);
        }
        assert_eq!(g[(0, 0)], 0.0);

        let t0 = ArfimaParams::fractional(0.3);
        let (_, g) = b_series(&t0, &t0, 20).unwrap();
        for s in 1..20 {
            assert!((g[(s, 0)] + 1.0 / s as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn b_series_gradient_matches_finite_differences() {
        let truth = ArfimaParams::new(vec![0.5], vec![-0.3], 0.4);
        let at = ArfimaParams::new(vec![0.45], vec![-0.2], 0.55);
        let len = 60;
        let (_, g) = b_series(&at, &truth, len).unwrap();
        let eta = at.to_eta();
        let h = 1e-6;
        for i in 0..eta.len() {
            let mut up = eta.clone();
            let mut dn = eta.clone();
            up[i] += h;
            dn[i] -= h;
            let (bu, _) = b_series(&ArfimaParams::from_eta(1, 1, &up).unwrap(), &truth, len).unwrap();
            let (bd, _) = b_series(&ArfimaParams::from_eta(1, 1, &dn).unwrap(), &truth, len).unwrap();
            for s in 0..len {
                let fd = (bu[s] - bd[s]) / (2.0 * h);
                assert!((fd - g[(s, i)]).abs() <= 1e-6 * (1.0 + fd.abs()), "i={i} s={s}");
            }
        }
    }

    #[test]
    fn b_series_reproduces_residuals() {
        // eps_t(eta) computed from data equals sum_s b_s(eta) eps_{t-s}
        let truth = ArfimaParams::new(vec![0.3], vec![0.2], 0.6);
        let at = ArfimaParams::new(vec![0.1], vec![-0.4], 0.9);
        let (y, eps) = simulate(&truth, 1.0, 200, 4, Innovation::Gaussian).unwrap();
        let r = residuals(&y, &at).unwrap();
        let (b, _) = b_series(&at, &truth, 200).unwrap();
        let via_b = causal_convolve(&b, &eps);
        close(&r, &via_b, 1e-9);
    }
}
