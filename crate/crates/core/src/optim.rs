//! Projected quasi-Newton (BFGS) minimizer for box-constrained problems whose
//! objective may reject points (returns `None`) outside an implicit feasible set.

use nalgebra::{DMatrix, DVector};

/// Objective value, gradient and an optional positive-semidefinite curvature
/// matrix (e.g. Gauss-Newton) used to seed and reset the inverse-Hessian estimate.
pub(crate) struct Evaluation {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub curvature: Option<DMatrix<f64>>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Settings {
    pub max_iter: usize,
    /// Converged when the projected gradient norm is at most `grad_tol * (1 + |f|)`,
    /// or when the Newton decrement `g' C^{-1} g` under the supplied curvature `C`
    /// is at most `grad_tol^2 * (1 + |f|)` (the predicted remaining decrease is
    /// below what `f` can resolve; this matters for badly scaled problems).
    pub grad_tol: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct Outcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub projected_gradient_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// The last failed line search was cut short by points the objective rejected.
    pub blocked: bool,
}

fn project(x: &mut DVector<f64>, lo: &[f64], hi: &[f64]) {
    for i in 0..x.len() {
        x[i] = x[i].clamp(lo[i], hi[i]);
    }
}

fn free_mask(x: &DVector<f64>, g: &DVector<f64>, lo: &[f64], hi: &[f64]) -> Vec<bool> {
    (0..x.len())
        .map(|i| {
            let span = (hi[i] - lo[i]).abs().max(1.0);
            let at_lo = x[i] <= lo[i] + 1e-12 * span && g[i] > 0.0;
            let at_hi = x[i] >= hi[i] - 1e-12 * span && g[i] < 0.0;
            !(at_lo || at_hi)
        })
        .collect()
}

fn newton_decrement(curv: Option<&DMatrix<f64>>, pg: &DVector<f64>, mask: &[bool]) -> Option<f64> {
    let c = curv?;
    let idx: Vec<usize> = (0..mask.len()).filter(|&i| mask[i]).collect();
    if idx.is_empty() {
        return Some(0.0);
    }
    let k = idx.len();
    let sub = DMatrix::from_fn(k, k, |r, q| c[(idx[r], idx[q])]);
    let g = DVector::from_fn(k, |r, _| pg[idx[r]]);
    let scale = sub.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(scale > 0.0) {
        return None;
    }
    let ch = (sub + DMatrix::identity(k, k) * (1e-12 * scale)).cholesky()?;
    Some(g.dot(&ch.solve(&g)))
}

fn is_converged(cur: &Evaluation, pg: &DVector<f64>, mask: &[bool], tol: f64) -> bool {
    let scale = 1.0 + cur.value.abs();
    pg.norm() <= tol * scale
        || newton_decrement(cur.curvature.as_ref(), pg, mask).is_some_and(|dec| dec <= tol * tol * scale)
}

fn inverse_of(curv: Option<&DMatrix<f64>>, n: usize, value: f64) -> DMatrix<f64> {
    if let Some(c) = curv {
        let scale = c.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        let ridge = DMatrix::identity(n, n) * (1e-10 * scale);
        if let Some(ch) = (c + ridge).cholesky() {
            return ch.inverse();
        }
    }
    DMatrix::identity(n, n) / (1.0 + value.abs())
}

pub(crate) fn minimize<F>(f: F, x0: &[f64], lo: &[f64], hi: &[f64], settings: Settings) -> Option<Outcome>
where
    F: Fn(&[f64]) -> Option<Evaluation>,
{
    let n = x0.len();
    let mut x = DVector::from_column_slice(x0);
    project(&mut x, lo, hi);
    let mut cur = f(x.as_slice())?;
    let mut h = inverse_of(cur.curvature.as_ref(), n, cur.value);
    let mut iterations = 0;
    let mut converged = false;
    let mut pg_norm = f64::INFINITY;
    let mut fresh = true;
    let mut blocked = false;

    while iterations < settings.max_iter {
        let mask = free_mask(&x, &cur.gradient, lo, hi);
        let pg = DVector::from_fn(n, |i, _| if mask[i] { cur.gradient[i] } else { 0.0 });
        pg_norm = pg.norm();
        if is_converged(&cur, &pg, &mask, settings.grad_tol) {
            converged = true;
            break;
        }
        iterations += 1;

        let mut p = -(&h * &pg);
        for i in 0..n {
            if !mask[i] {
                p[i] = 0.0;
            }
        }
        if p.dot(&pg) >= 0.0 {
            h = inverse_of(cur.curvature.as_ref(), n, cur.value);
            p = -(&h * &pg);
            for i in 0..n {
                if !mask[i] {
                    p[i] = 0.0;
                }
            }
            fresh = true;
        }

        let direction_fresh = fresh;
        let mut step = 1.0;
        let mut accepted = None;
        let mut rejected = false;
        for _ in 0..60 {
            let mut xn = &x + &p * step;
            project(&mut xn, lo, hi);
            let dx = &xn - &x;
            if dx.norm() == 0.0 {
                break;
            }
            if let Some(ev) = f(xn.as_slice()) {
                if ev.value.is_finite() && ev.value <= cur.value + 1e-4 * cur.gradient.dot(&dx) {
                    accepted = Some((xn, ev));
                    break;
                }
            } else {
                rejected = true;
            }
            step *= 0.5;
        }

        let accepted_step = step;
        let Some((xn, next)) = accepted else {
            blocked = rejected;
            if fresh {
                break;
            }
            h = inverse_of(cur.curvature.as_ref(), n, cur.value);
            fresh = true;
            continue;
        };

        let s = &xn - &x;
        let yv = &next.gradient - &cur.gradient;
        let sy = s.dot(&yv);
        let stalled = accepted_step < 1e-6
            || ((cur.value - next.value).abs() <= 1e-15 * cur.value.abs().max(1e-300)
                && s.norm() <= 1e-14 * (1.0 + x.norm()));
        if sy > 1e-12 * s.norm() * yv.norm() {
            let rho = 1.0 / sy;
            let hy = &h * &yv;
            let yhy = yv.dot(&hy);
            h += (&s * s.transpose()) * (rho * rho * yhy + rho)
                - (&hy * s.transpose() + &s * hy.transpose()) * rho;
            fresh = false;
        } else {
            h = inverse_of(next.curvature.as_ref(), n, next.value);
            fresh = true;
        }
        blocked = false;
        x = xn;
        cur = next;
        if stalled {
            // a tiny accepted step usually means a poor inverse-Hessian estimate
            if direction_fresh {
                break;
            }
            h = inverse_of(cur.curvature.as_ref(), n, cur.value);
            fresh = true;
        }
    }

    if !converged {
        let mask = free_mask(&x, &cur.gradient, lo, hi);
        let pg = DVector::from_fn(n, |i, _| if mask[i] { cur.gradient[i] } else { 0.0 });
        pg_norm = pg.norm();
        converged = is_converged(&cur, &pg, &mask, settings.grad_tol);
    }

    Some(Outcome {
        x: x.as_slice().to_vec(),
        value: cur.value,
        projected_gradient_norm: pg_norm,
        iterations,
        converged,
        blocked,
    })
}
