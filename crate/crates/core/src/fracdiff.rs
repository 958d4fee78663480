//! Fractional differencing `(1 - B)^d` under zero initial conditions.

use crate::error::{ArfimaError, Result};
use crate::series::causal_convolve;

/// Leading coefficients of the binomial expansion of `(1 - z)^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct FracCoeffs {
    d: f64,
    coeffs: Vec<f64>,
}

impl FracCoeffs {
    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.coeffs
    }
}

fn check_d(d: f64) -> Result<()> {
    if d.is_finite() {
        Ok(())
    } else {
        Err(ArfimaError::InvalidParameter(format!("memory parameter d = {d} is not finite")))
    }
}

/// `pi_0..pi_{length-1}` of `(1 - z)^d` by `pi_k = pi_{k-1} (k - 1 - d) / k`.
pub fn frac_coeffs(d: f64, length: usize) -> Result<FracCoeffs> {
    check_d(d)?;
    if length == 0 {
        return Err(ArfimaError::InvalidParameter("coefficient length must be >= 1".into()));
    }
    Ok(FracCoeffs { d, coeffs: frac_coeffs_raw(d, length) })
}

pub(crate) fn frac_coeffs_raw(d: f64, length: usize) -> Vec<f64> {
    let mut c = Vec::with_capacity(length);
    if length == 0 {
        return c;
    }
    c.push(1.0);
    for k in 1..length {
        let kf = k as f64;
        let prev = c[k - 1];
        c.push(prev * (kf - 1.0 - d) / kf);
    }
    c
}

/// `v_t = sum_{k=0}^{t-1} pi_k(d) y_{t-k}`.
pub fn apply_frac_diff(y: &[f64], d: f64) -> Result<Vec<f64>> {
    check_d(d)?;
    if y.is_empty() {
        return Err(ArfimaError::InvalidParameter("series must be nonempty".into()));
    }
    Ok(frac_diff_raw(y, d))
}

/// Splits `d = m + delta` with integer `m` and `|delta| <= 1/2` and applies
/// the integer part as exact differences or partial sums. Under zero initial
/// conditions the pieces compose exactly; ordering them so the long fractional
/// dot products run on the smaller series keeps rounding near one ulp of `y`.
pub(crate) fn frac_diff_raw(y: &[f64], d: f64) -> Vec<f64> {
    let m = d.round();
    let delta = d - m;
    let frac = |x: Vec<f64>| {
        if delta == 0.0 {
            x
        } else {
            causal_convolve(&frac_coeffs_raw(delta, x.len()), &x)
        }
    };
    if m >= 0.0 {
        let mut x = y.to_vec();
        for _ in 0..m as usize {
            for t in (1..x.len()).rev() {
                x[t] -= x[t - 1];
            }
        }
        frac(x)
    } else {
        let mut x = frac(y.to_vec());
        for _ in 0..(-m) as usize {
            for t in 1..x.len() {
                x[t] += x[t - 1];
            }
        }
        x
    }
}

/// Impulse response of `log(1 - B) = -sum_{k>=1} B^k / k`, length `n`.
pub(crate) fn log_filter_coeffs(n: usize) -> Vec<f64> {
    let mut c = vec![0.0; n];
    for (k, ck) in c.iter_mut().enumerate().skip(1) {
        *ck = -1.0 / k as f64;
    }
    c
}

/// `z_t = -sum_{k=1}^{t-1} x_{t-k} / k`, i.e. `log(1 - B)` applied to `x`.
pub fn log_diff_filter(x: &[f64]) -> Result<Vec<f64>> {
    if x.is_empty() {
        return Err(ArfimaError::InvalidParameter("series must be nonempty".into()));
    }
    Ok(log_filter_raw(x))
}

pub(crate) fn log_filter_raw(x: &[f64]) -> Vec<f64> {
    causal_convolve(&log_filter_coeffs(x.len()), x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    /// Direct binomial coefficient `(-1)^k C(d, k)` computed by a product, as an oracle.
    fn binom_oracle(d: f64, k: usize) -> f64 {
        let mut p = 1.0;
        for j in 0..k {
            p *= (d - j as f64) / (j as f64 + 1.0);
        }
        if k % 2 == 1 {
            -p
        } else {
            p
        }
    }

    #[test]
    fn coefficient_examples() {
        close(frac_coeffs(1.0, 4).unwrap().coeffs(), &[1.0, -1.0, 0.0, 0.0], 0.0);
        close(frac_coeffs(0.0, 3).unwrap().coeffs(), &[1.0, 0.0, 0.0], 0.0);
        close(frac_coeffs(-0.4, 3).unwrap().coeffs(), &[1.0, 0.4, 0.28], 1e-15);
    }

    #[test]
    fn integer_d_truncates() {
        for m in 0..5usize {
            let c = frac_coeffs(m as f64, 12).unwrap();
            assert_eq!(c.coeffs()[0], 1.0);
            for k in (m + 1)..12 {
                assert_eq!(c.coeffs()[k], 0.0);
            }
        }
    }

    #[test]
    fn recursion_matches_binomial_formula() {
        for &d in &[0.3, -0.45, 1.7, 2.0, -3.2] {
            let c = frac_coeffs(d, 30).unwrap();
            for k in 0..30 {
                let o = binom_oracle(d, k);
                assert!((c.coeffs()[k] - o).abs() <= 1e-12 * (1.0 + o.abs()));
            }
        }
    }

    #[test]
    fn large_horizon_is_finite() {
        let c = frac_coeffs(9.5, 100_000).unwrap();
        assert!(c.coeffs().iter().all(|v| v.is_finite()));
        let c = frac_coeffs(-9.5, 100_000).unwrap();
        assert!(c.coeffs().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn errors() {
        assert!(frac_coeffs(f64::NAN, 3).is_err());
        assert!(frac_coeffs(f64::INFINITY, 3).is_err());
        assert!(frac_coeffs(0.2, 0).is_err());
        assert!(apply_frac_diff(&[], 0.1).is_err());
        assert!(apply_frac_diff(&[1.0], f64::NAN).is_err());
        assert!(log_diff_filter(&[]).is_err());
    }

    #[test]
    fn apply_examples() {
        close(&apply_frac_diff(&[1.0, 2.0, 3.0], 0.0).unwrap(), &[1.0, 2.0, 3.0], 0.0);
        close(&apply_frac_diff(&[1.0, 2.0, 3.0], 1.0).unwrap(), &[1.0, 1.0, 1.0], 1e-15);
        close(
            &apply_frac_diff(&[1.0, 0.0, 0.0], 0.3).unwrap(),
            &[1.0, -0.3, -0.105],
            1e-15,
        );
    }

    #[test]
    fn log_filter_examples() {
        close(
            &log_diff_filter(&[1.0, 0.0, 0.0, 0.0]).unwrap(),
            &[0.0, -1.0, -0.5, -1.0 / 3.0],
            1e-15,
        );
        close(&log_diff_filter(&[0.0, 0.0, 0.0]).unwrap(), &[0.0, 0.0, 0.0], 0.0);
        close(&log_diff_filter(&[1.0, 1.0, 1.0]).unwrap(), &[0.0, -1.0, -1.5], 1e-15);
    }

    /// d/dd of the recursion: pi'_k = pi'_{k-1} (k-1-d)/k - pi_{k-1}/k.
    fn coeff_derivative_oracle(d: f64, len: usize) -> Vec<f64> {
        let pi = frac_coeffs_raw(d, len);
        let mut dp = vec![0.0; len];
        for k in 1..len {
            let kf = k as f64;
            dp[k] = dp[k - 1] * (kf - 1.0 - d) / kf - pi[k - 1] / kf;
        }
        dp
    }

    #[test]
    fn derivative_in_d_is_log_filter_of_coefficients() {
        for &d in &[-2.3, -0.4, 0.0, 0.3, 1.0, 2.6] {
            let len = 300;
            let oracle = coeff_derivative_oracle(d, len);
            let via_log = log_filter_raw(&frac_coeffs_raw(d, len));
            for k in 0..len {
                assert!(
                    (oracle[k] - via_log[k]).abs() <= 1e-8 * (1.0 + oracle[k].abs()),
                    "d={d} k={k}: {} vs {}",
                    oracle[k],
                    via_log[k]
                );
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn convolution_inverse(d in -5.0f64..5.0, len in 1usize..512) {
            let a = frac_coeffs_raw(d, len);
            let b = frac_coeffs_raw(-d, len);
            let prod = causal_convolve(&a, &b);
            let abs_a: Vec<f64> = a.iter().map(|v| v.abs()).collect();
            let abs_b: Vec<f64> = b.iter().map(|v| v.abs()).collect();
            let scale = causal_convolve(&abs_a, &abs_b);
            prop_assert!((prod[0] - 1.0).abs() <= 1e-10);
            for (v, s) in prod[1..].iter().zip(&scale[1..]) {
                prop_assert!(v.abs() <= 1e-10 * s.max(1.0), "entry {v} scale {s}");
            }
        }

        #[test]
        fn semigroup(
            d1 in -1.5f64..1.5,
            d2 in -1.5f64..1.5,
            y in proptest::collection::vec(-10.0f64..10.0, 1..256),
        ) {
            let lhs = frac_diff_raw(&frac_diff_raw(&y, d1), d2);
            let rhs = frac_diff_raw(&y, d1 + d2);
            let scale = rhs.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            for (a, b) in lhs.iter().zip(&rhs) {
                prop_assert!((a - b).abs() <= 1e-9 * scale);
            }
        }
    }
}
