//! Lag polynomials `1 - c_1 z - ... - c_p z^p`, stability checks, rational
//! power-series expansion and the companion matrices used by the multi-step
//! predictor and the MSPE expressions.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{ArfimaError, Result};

/// Roots with modulus in `(1, 1 + STABILITY_MARGIN]` count as unstable.
pub const STABILITY_MARGIN: f64 = 1e-12;
/// Two roots closer than this are treated as a common zero.
pub const COMMON_ROOT_TOL: f64 = 1e-8;

/// `1 - c_1 z - ... - c_p z^p`; the constant term is implicit.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LagPoly {
    coeffs: Vec<f64>,
}

impl LagPoly {
    pub fn new(coeffs: Vec<f64>) -> Self {
        LagPoly { coeffs }
    }

    pub fn one() -> Self {
        LagPoly { coeffs: Vec::new() }
    }

    /// `c_1..c_p`.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len()
    }

    /// Ordinary power-series coefficients `(1, -c_1, ..., -c_p)`.
    pub fn series(&self) -> Vec<f64> {
        std::iter::once(1.0).chain(self.coeffs.iter().map(|c| -c)).collect()
    }

    pub fn eval(&self, z: Complex<f64>) -> Complex<f64> {
        let mut acc = Complex::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            acc = (acc + Complex::new(*c, 0.0)) * z;
        }
        Complex::new(1.0, 0.0) - acc
    }

    /// Reciprocal roots `w = 1/z`: eigenvalues of the AR companion matrix.
    /// Zero eigenvalues (a vanishing leading coefficient) are included.
    pub fn inverse_roots(&self) -> Vec<Complex<f64>> {
        let p = self.degree();
        if p == 0 {
            return Vec::new();
        }
        if p == 1 {
            return vec![Complex::new(self.coeffs[0], 0.0)];
        }
        ar_companion(&self.coeffs).complex_eigenvalues().iter().copied().collect()
    }

    /// Finite roots `z` of the polynomial.
    pub fn roots(&self) -> Vec<Complex<f64>> {
        self.inverse_roots()
            .into_iter()
            .filter(|w| w.norm() > 1e-300)
            .map(|w| Complex::new(1.0, 0.0) / w)
            .collect()
    }

    /// Largest modulus among the reciprocal roots (0 for the constant polynomial).
    pub fn spectral_radius(&self) -> f64 {
        self.inverse_roots().iter().map(|w| w.norm()).fold(0.0, f64::max)
    }

    /// All roots strictly outside the closed unit disk, with margin [`STABILITY_MARGIN`].
    pub fn is_stable(&self) -> bool {
        if self.coeffs.iter().any(|c| !c.is_finite()) {
            return false;
        }
        self.inverse_roots().iter().all(|w| w.norm() * (1.0 + STABILITY_MARGIN) < 1.0)
    }
}

pub fn poly_is_stable(p: &LagPoly) -> bool {
    p.is_stable()
}

/// True when the two polynomials have a root in common (within [`COMMON_ROOT_TOL`]).
pub fn share_root(a: &LagPoly, b: &LagPoly) -> bool {
    let ra = a.roots();
    let rb = b.roots();
    ra.iter().any(|x| {
        rb.iter().any(|y| (x - y).norm() <= COMMON_ROOT_TOL * (1.0f64).max(x.norm()))
    })
}

/// Standard AR companion: first row `c`, ones on the subdiagonal.
fn ar_companion(c: &[f64]) -> DMatrix<f64> {
    let p = c.len();
    let mut m = DMatrix::zeros(p, p);
    for j in 0..p {
        m[(0, j)] = c[j];
    }
    for i in 1..p {
        m[(i, i - 1)] = 1.0;
    }
    m
}

/// First `length` coefficients of `num(z) / den(z)`.
pub fn rational_expansion(num: &LagPoly, den: &LagPoly, length: usize) -> Result<Vec<f64>> {
    if !den.is_stable() {
        return Err(ArfimaError::Domain("denominator polynomial is not stable".into()));
    }
    Ok(rational_expansion_raw(num, den, length))
}

pub(crate) fn rational_expansion_raw(num: &LagPoly, den: &LagPoly, length: usize) -> Vec<f64> {
    let a = num.series();
    let dc = den.coeffs();
    let mut c = vec![0.0; length];
    for s in 0..length {
        let mut v = if s < a.len() { a[s] } else { 0.0 };
        for (j, dj) in dc.iter().enumerate() {
            if j + 1 > s {
                break;
            }
            v += dj * c[s - j - 1];
        }
        c[s] = v;
    }
    c
}

/// Divides a power series by a lag polynomial in place: `x <- x / den`.
pub(crate) fn divide_series(x: &mut [f64], den: &[f64]) {
    for s in 0..x.len() {
        let mut v = x[s];
        for (j, dj) in den.iter().enumerate() {
            if j + 1 > s {
                break;
            }
            v += dj * x[s - j - 1];
        }
        x[s] = v;
    }
}

/// Multiplies a power series by a lag polynomial: `x * (1 - sum c_j z^j)`.
pub(crate) fn multiply_series(x: &[f64], poly: &[f64]) -> Vec<f64> {
    let mut out = x.to_vec();
    for s in 0..x.len() {
        for (j, cj) in poly.iter().enumerate() {
            if j + 1 > s {
                break;
            }
            out[s] -= cj * x[s - j - 1];
        }
    }
    out
}

/// The matrix `A(theta)` that propagates the short-memory forecast weights:
/// `vhat_{n+l} = -u_n' A^{l-1} theta`.
///
/// Rows `1..p1` carry `alpha` in the first column and an up-shift in columns
/// `2..p1`; rows `p1+1..p1+p2` carry `beta` in the first column and an up-shift
/// inside the MA block. With `p1 = 0` there is no AR column, so the matrix is
/// the pure MA up-shift.
#[derive(Debug, Clone, PartialEq)]
pub struct CompanionA {
    matrix: DMatrix<f64>,
}

impl CompanionA {
    pub fn new(alpha: &[f64], beta: &[f64]) -> Self {
        let (p1, p2) = (alpha.len(), beta.len());
        let k = p1 + p2;
        let mut m = DMatrix::zeros(k, k);
        if p1 > 0 {
            for i in 0..p1 {
                m[(i, 0)] = alpha[i];
                if i + 1 < p1 {
                    m[(i, i + 1)] = 1.0;
                }
            }
            for j in 0..p2 {
                m[(p1 + j, 0)] = beta[j];
            }
        }
        for j in 0..p2 {
            if j + 1 < p2 {
                m[(p1 + j, p1 + j + 1)] = 1.0;
            }
        }
        CompanionA { matrix: m }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Block-diagonal `Ã(theta) = diag(C(alpha), C(beta))`, where each block has
/// the coefficients in its first column and ones on the superdiagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CompanionATilde {
    matrix: DMatrix<f64>,
}

impl CompanionATilde {
    pub fn new(alpha: &[f64], beta: &[f64]) -> Self {
        let (p1, p2) = (alpha.len(), beta.len());
        let k = p1 + p2;
        let mut m = DMatrix::zeros(k, k);
        for (off, c) in [(0usize, alpha), (p1, beta)] {
            let p = c.len();
            for i in 0..p {
                m[(off + i, off)] = c[i];
                if i + 1 < p {
                    m[(off + i, off + i + 1)] = 1.0;
                }
            }
        }
        CompanionATilde { matrix: m }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// `M^k v` by repeated multiplication.
pub fn companion_power_apply(m: &DMatrix<f64>, k: usize, v: &DVector<f64>) -> Result<DVector<f64>> {
    if !m.is_square() || m.nrows() != v.len() {
        return Err(ArfimaError::DimensionMismatch { expected: m.nrows(), got: v.len() });
    }
    let mut out = v.clone();
    for _ in 0..k {
        out = m * out;
    }
    Ok(out)
}
