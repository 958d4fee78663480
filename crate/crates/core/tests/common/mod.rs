#![allow(dead_code)]

use arfima::ArfimaParams;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Coefficients `c` of `prod_i (1 - r_i z) = 1 - c_1 z - ... - c_p z^p` for real
/// inverse roots `r_i`.
pub fn lag_coeffs_from_inverse_roots(roots: &[f64]) -> Vec<f64> {
    let mut poly = vec![1.0];
    for r in roots {
        let mut next = vec![0.0; poly.len() + 1];
        for (k, c) in poly.iter().enumerate() {
            next[k] += c;
            next[k + 1] -= r * c;
        }
        poly = next;
    }
    poly[1..].iter().map(|c| -c).collect()
}

fn draw_roots(r: &mut ChaCha8Rng, p: usize, radius: f64) -> Vec<f64> {
    (0..p)
        .map(|_| {
            let m = r.gen_range(0.1..radius);
            if r.gen_bool(0.5) {
                m
            } else {
                -m
            }
        })
        .collect()
}

/// A feasible ARFIMA model with orders up to `max_order`, inverse roots of modulus
/// at most `radius`, and `d` uniform on `d_range`.
pub fn random_model(r: &mut ChaCha8Rng, max_order: usize, radius: f64, d_range: (f64, f64)) -> ArfimaParams {
    loop {
        let p1 = r.gen_range(0..=max_order);
        let p2 = r.gen_range(0..=max_order);
        let alpha = lag_coeffs_from_inverse_roots(&draw_roots(r, p1, radius));
        let beta = lag_coeffs_from_inverse_roots(&draw_roots(r, p2, radius));
        let d = r.gen_range(d_range.0..d_range.1);
        let params = ArfimaParams::new(alpha, beta, d);
        if params.validate().is_ok() {
            return params;
        }
    }
}
