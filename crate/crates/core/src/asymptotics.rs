//! Limit quantities for the second-order MSPE of the CSS predictor: the
//! information matrix, its partitioned inverse, `R(h)`, `Q_h`, and the
//! `f + g + 2J` decomposition.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::arfima::ArfimaParams;
use crate::error::{ArfimaError, Result};
use crate::forecast::psi_weights;
use crate::fracdiff::frac_coeffs_raw;
use crate::lintime::{rational_expansion_raw, CompanionATilde, LagPoly};

pub const DEFAULT_TRUNCATION: usize = 100_000;
pub const MIN_TRUNCATION: usize = 1_000;
/// Estimated tail mass above which a result carries a truncation warning.
pub const TAIL_WARNING: f64 = 1e-6;

const ZETA2: f64 = PI * PI / 6.0;

fn check_truncation(truncation: usize) -> Result<()> {
    if truncation < MIN_TRUNCATION {
        return Err(ArfimaError::InvalidParameter(format!(
            "truncation must be >= {MIN_TRUNCATION}, got {truncation}"
        )));
    }
    Ok(())
}

/// Score coefficients at the truth, rows `s = 1..=truncation`:
/// `b_{s,alpha_k} = -psi1_{s-k}`, `b_{s,beta_j} = psi2_{s-j}`, `b_{s,d} = -1/s`,
/// with `psi1 = 1/A1`, `psi2 = 1/A2`. They do not depend on `d0`.
pub fn score_coefficients(params0: &ArfimaParams, truncation: usize) -> Result<DMatrix<f64>> {
    params0.validate()?;
    if truncation == 0 {
        return Err(ArfimaError::InvalidParameter("truncation must be >= 1".into()));
    }
    Ok(score_coefficients_raw(&params0.alpha, &params0.beta, truncation))
}

fn score_coefficients_raw(alpha: &[f64], beta: &[f64], t: usize) -> DMatrix<f64> {
    let (p1, p2) = (alpha.len(), beta.len());
    let pb = p1 + p2 + 1;
    let mut b = DMatrix::zeros(t, pb);
    if p1 > 0 {
        let psi1 = rational_expansion_raw(&LagPoly::one(), &LagPoly::new(alpha.to_vec()), t);
        for k in 1..=p1 {
            for s in k..=t {
                b[(s - 1, k - 1)] = -psi1[s - k];
            }
        }
    }
    if p2 > 0 {
        let psi2 = rational_expansion_raw(&LagPoly::one(), &LagPoly::new(beta.to_vec()), t);
        for j in 1..=p2 {
            for s in j..=t {
                b[(s - 1, p1 + j - 1)] = psi2[s - j];
            }
        }
    }
    for s in 1..=t {
        b[(s - 1, pb - 1)] = -1.0 / s as f64;
    }
    b
}

/// Rough bound on the mass of the short-memory coefficient sums beyond the
/// truncation point, from the size of the last coefficient and the decay rate.
fn short_memory_tail(b: &DMatrix<f64>, alpha: &[f64], beta: &[f64]) -> f64 {
    let k = alpha.len() + beta.len();
    if k == 0 {
        return 0.0;
    }
    let rho = LagPoly::new(alpha.to_vec())
        .spectral_radius()
        .max(LagPoly::new(beta.to_vec()).spectral_radius());
    let last = b.nrows() - 1;
    let mut worst = 0.0f64;
    for i in 0..k {
        let window = b.nrows().min(16);
        let m = (0..window).map(|w| b[(last - w, i)].abs()).fold(0.0, f64::max);
        worst = worst.max(m);
    }
    if rho >= 1.0 {
        return f64::INFINITY;
    }
    worst / (1.0 - rho)
}

#[derive(Debug, Clone)]
pub struct FisherGamma {
    /// `p_bar x p_bar`.
    pub gamma: DMatrix<f64>,
    pub gamma11: DMatrix<f64>,
    pub gamma12: DVector<f64>,
    pub gamma22: f64,
    pub inv11: DMatrix<f64>,
    pub inv12: DVector<f64>,
    pub inv22: f64,
    pub truncation: usize,
    pub tail_estimate: f64,
    pub truncation_warning: bool,
}

impl FisherGamma {
    /// Reassembles the inverse from its blocks.
    pub fn inverse(&self) -> DMatrix<f64> {
        let k = self.gamma11.nrows();
        let mut m = DMatrix::zeros(k + 1, k + 1);
        m.view_mut((0, 0), (k, k)).copy_from(&self.inv11);
        for i in 0..k {
            m[(i, k)] = self.inv12[i];
            m[(k, i)] = self.inv12[i];
        }
        m[(k, k)] = self.inv22;
        m
    }
}

/// `Gamma_{ij} = sigma^2 sum_{s=1}^T b_{s,i} b_{s,j}` with the exact
/// `pi^2 sigma^2 / 6` in the memory corner, plus the partitioned inverse.
pub fn fisher_gamma(params0: &ArfimaParams, sigma2: f64, truncation: usize) -> Result<FisherGamma> {
    params0.validate()?;
    check_sigma2(sigma2)?;
    check_truncation(truncation)?;
    let b = score_coefficients_raw(&params0.alpha, &params0.beta, truncation);
    Ok(gamma_from_coefficients(&b, &params0.alpha, &params0.beta, sigma2))
}

fn check_sigma2(sigma2: f64) -> Result<()> {
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(ArfimaError::InvalidParameter(format!("sigma2 must be positive, got {sigma2}")));
    }
    Ok(())
}

fn gamma_from_coefficients(b: &DMatrix<f64>, alpha: &[f64], beta: &[f64], sigma2: f64) -> FisherGamma {
    let pb = b.ncols();
    let k = pb - 1;
    let mut gamma = b.transpose() * b * sigma2;
    gamma[(k, k)] = ZETA2 * sigma2;
    let gamma11 = gamma.view((0, 0), (k, k)).into_owned();
    let gamma12 = gamma.view((0, k), (k, 1)).column(0).into_owned();
    let gamma22 = gamma[(k, k)];

    let inv = match gamma.clone().cholesky() {
        Some(c) => c.inverse(),
        None => gamma.clone().try_inverse().unwrap_or_else(|| DMatrix::zeros(pb, pb)),
    };
    let inv11 = inv.view((0, 0), (k, k)).into_owned();
    let inv12 = inv.view((0, k), (k, 1)).column(0).into_owned();
    let inv22 = inv[(k, k)];
    let tail_estimate = short_memory_tail(b, alpha, beta);
    FisherGamma {
        gamma,
        gamma11,
        gamma12,
        gamma22,
        inv11,
        inv12,
        inv22,
        truncation: b.nrows(),
        tail_estimate,
        truncation_warning: tail_estimate > TAIL_WARNING,
    }
}

/// `R(h)`: diagonal `6/pi^2 sum_{l > h-i} l^{-2}`, off-diagonal
/// `6/pi^2 (j-i)^{-1} sum_{l=1}^{j-i} (h-j+l)^{-1}` for `i < j`.
pub fn r_matrix(h: usize) -> Result<DMatrix<f64>> {
    if h == 0 {
        return Err(ArfimaError::InvalidParameter("horizon h must be >= 1".into()));
    }
    Ok(r_matrix_raw(h))
}

fn r_matrix_raw(h: usize) -> DMatrix<f64> {
    let c = 6.0 / (PI * PI);
    let mut partial = vec![0.0; h + 1];
    for l in 1..=h {
        partial[l] = partial[l - 1] + 1.0 / (l as f64).powi(2);
    }
    let mut r = DMatrix::zeros(h, h);
    for i in 1..=h {
        r[(i - 1, i - 1)] = c * (ZETA2 - partial[h - i]);
        for j in (i + 1)..=h {
            let m = j - i;
            let s: f64 = (1..=m).map(|l| 1.0 / (h - j + l) as f64).sum();
            let v = c * s / m as f64;
            r[(i - 1, j - 1)] = v;
            r[(j - 1, i - 1)] = v;
        }
    }
    r
}

/// `Q_h(theta0)`, `(p1+p2) x h`: entry `(i, j) = sigma^2 sum_{k=1}^T b_{k,i} / (k + h - j)`.
pub fn q_matrix(params0: &ArfimaParams, sigma2: f64, h: usize, truncation: usize) -> Result<DMatrix<f64>> {
    params0.validate()?;
    check_sigma2(sigma2)?;
    check_truncation(truncation)?;
    if h == 0 {
        return Err(ArfimaError::InvalidParameter("horizon h must be >= 1".into()));
    }
    let b = score_coefficients_raw(&params0.alpha, &params0.beta, truncation);
    Ok(q_from_coefficients(&b, sigma2, h))
}

fn q_from_coefficients(b: &DMatrix<f64>, sigma2: f64, h: usize) -> DMatrix<f64> {
    let k = b.ncols() - 1;
    let t = b.nrows();
    let mut q = DMatrix::zeros(k, h);
    for j in 1..=h {
        let w: Vec<f64> = (1..=t).map(|kk| 1.0 / (kk + h - j) as f64).collect();
        for i in 0..k {
            let col = b.column(i);
            let s: f64 = col.iter().zip(&w).map(|(a, b)| a * b).sum();
            q[(i, j - 1)] = sigma2 * s;
        }
    }
    q
}

/// `sum_{s<h} c_s Ã^{h-1-s}` by Horner's rule.
fn l_matrix(alpha: &[f64], beta: &[f64], c: &[f64]) -> DMatrix<f64> {
    let k = alpha.len() + beta.len();
    let a = CompanionATilde::new(alpha, beta);
    let mut l = DMatrix::zeros(k, k);
    for cs in c {
        l = &l * a.matrix() + DMatrix::identity(k, k) * *cs;
    }
    l
}

#[derive(Debug, Clone)]
pub struct MspeDecomposition {
    pub h: usize,
    pub f: f64,
    pub g: f64,
    pub j: f64,
    /// `(f + g + 2j) sigma^2`.
    pub total_second_order: f64,
    pub sigma2_h: f64,
    pub sigma2: f64,
    pub r: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub l: DMatrix<f64>,
    /// `c_0..c_{h-1}`.
    pub c: Vec<f64>,
    pub truncation_warning: bool,
}

/// Second-order MSPE coefficients of the h-step CSS predictor:
/// `f = tr(Gamma11 L Gammã11 L')`, `g = (pi^2 sigma^2/6) gammã22 c'R(h)c`,
/// `J = -gammã12' L' Q_h c`.
///
/// The sign on `J` follows `Q_h`'s first column being `-gamma12`; with it the
/// three terms add up to `p_bar` at `h = 1`.
pub fn mspe_decomposition(
    params0: &ArfimaParams,
    sigma2: f64,
    h: usize,
    truncation: usize,
) -> Result<MspeDecomposition> {
    params0.validate()?;
    check_sigma2(sigma2)?;
    check_truncation(truncation)?;
    if h == 0 {
        return Err(ArfimaError::InvalidParameter("horizon h must be >= 1".into()));
    }
    let b = score_coefficients_raw(&params0.alpha, &params0.beta, truncation);
    let fg = gamma_from_coefficients(&b, &params0.alpha, &params0.beta, sigma2);
    let q = q_from_coefficients(&b, sigma2, h);
    Ok(assemble(params0, sigma2, h, &fg, q))
}

fn assemble(params0: &ArfimaParams, sigma2: f64, h: usize, fg: &FisherGamma, q: DMatrix<f64>) -> MspeDecomposition {
    let c = psi_weights(params0, h);
    let cv = DVector::from_column_slice(&c);
    let l = l_matrix(&params0.alpha, &params0.beta, &c);
    let r = r_matrix_raw(h);
    let f = if l.nrows() == 0 { 0.0 } else { (&fg.gamma11 * &l * &fg.inv11 * l.transpose()).trace() };
    let g = ZETA2 * sigma2 * fg.inv22 * cv.dot(&(&r * &cv));
    let j = if l.nrows() == 0 { 0.0 } else { -fg.inv12.dot(&(l.transpose() * (&q * &cv))) };
    MspeDecomposition {
        h,
        f,
        g,
        j,
        total_second_order: (f + g + 2.0 * j) * sigma2,
        sigma2_h: sigma2 * c.iter().map(|x| x * x).sum::<f64>(),
        sigma2,
        r,
        q,
        l,
        c,
        truncation_warning: fg.truncation_warning,
    }
}

/// Decompositions for horizons `1..=h_max`, sharing one set of score coefficients.
pub fn mspe_table(
    params0: &ArfimaParams,
    sigma2: f64,
    h_max: usize,
    truncation: usize,
) -> Result<Vec<MspeDecomposition>> {
    params0.validate()?;
    check_sigma2(sigma2)?;
    check_truncation(truncation)?;
    if h_max == 0 {
        return Err(ArfimaError::InvalidParameter("h-max must be >= 1".into()));
    }
    let b = score_coefficients_raw(&params0.alpha, &params0.beta, truncation);
    let fg = gamma_from_coefficients(&b, &params0.alpha, &params0.beta, sigma2);
    Ok((1..=h_max)
        .map(|h| assemble(params0, sigma2, h, &fg, q_from_coefficients(&b, sigma2, h)))
        .collect())
}

/// `c̄' R(h) c̄` with `c̄_s = ` coefficients of `(1 - z)^{-d0}`.
pub fn g_bar_pure_fractional(d0: f64, h: usize) -> Result<f64> {
    if !d0.is_finite() {
        return Err(ArfimaError::InvalidParameter("d0 must be finite".into()));
    }
    let r = r_matrix(h)?;
    let c = DVector::from_vec(frac_coeffs_raw(-d0, h));
    Ok(c.dot(&(&r * &c)))
}

/// `tr(Gamma11 L̃ Gamma11^{-1} L̃')` where `L̃` is built from the ARMA weights alone.
/// Independent of `sigma^2`.
pub fn f_bar_arma(alpha: &[f64], beta: &[f64], h: usize, truncation: usize) -> Result<f64> {
    let params = ArfimaParams::new(alpha.to_vec(), beta.to_vec(), 0.0);
    params.validate()?;
    check_truncation(truncation)?;
    if h == 0 {
        return Err(ArfimaError::InvalidParameter("horizon h must be >= 1".into()));
    }
    let k = alpha.len() + beta.len();
    if k == 0 {
        return Ok(0.0);
    }
    let b = score_coefficients_raw(alpha, beta, truncation);
    let g11 = b.view((0, 0), (b.nrows(), k)).into_owned();
    let g11 = g11.transpose() * g11;
    let inv = g11
        .clone()
        .try_inverse()
        .ok_or_else(|| ArfimaError::Domain("Gamma11 is singular".into()))?;
    let c = psi_weights(&params, h);
    let l = l_matrix(alpha, beta, &c);
    Ok((&g11 * &l * inv * l.transpose()).trace())
}

/// Second-order one-step MSPE coefficient `p1 + v0^2` of the least-squares
/// AR(p1) predictor for a series integrated of order `v0`.
pub fn ls_second_order_mspe(p1: usize, v0: usize) -> Result<f64> {
    if v0 > p1 {
        return Err(ArfimaError::InvalidParameter(format!(
            "integration order v0 = {v0} exceeds AR order p1 = {p1}"
        )));
    }
    Ok((p1 + v0 * v0) as f64)
}

/// `2 h^2`: second-order h-step coefficient of the least-squares AR(1) predictor
/// on a random walk.
pub fn ls_random_walk_multistep(h: usize) -> Result<f64> {
    if h == 0 {
        return Err(ArfimaError::InvalidParameter("horizon h must be >= 1".into()));
    }
    Ok(2.0 * (h * h) as f64)
}

/// Comparison threshold `4.87 h + (1 + log h)^2 - 2 (1 + log 2h)` for the
/// random-walk CSS coefficient at `h >= 2`.
pub fn random_walk_bound(h: usize) -> f64 {
    let hf = h as f64;
    4.87 * hf + (1.0 + hf.ln()).powi(2) - 2.0 * (1.0 + (2.0 * hf).ln())
}
