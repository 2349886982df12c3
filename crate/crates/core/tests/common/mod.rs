//! Independent numerical oracles for the integration suite.
//!
//! Everything here is implemented separately from the library's own
//! numerics (different quadrature, different eigensolver) so agreement is
//! meaningful.

#![allow(dead_code)]

use divform::disc::StiffnessOperator;

/// int_0^inf (1 + t^4)^{-1/2} dt = Gamma(1/4)^2 / (4 sqrt(pi)).
///
/// Frozen from the closed form (Gamma(1/4) = 3.6256099082219083);
/// the adaptive quadrature below reproduces it to 1e-12.
pub const QUARTIC_INTEGRAL: f64 = 1.854074677301372;

/// Recursive adaptive Simpson on [a, b].
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, m: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b))
    }
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        m: f64,
        b: f64,
        whole: f64,
        tol: f64,
        depth: usize,
    ) -> f64 {
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let left = simpson(f, a, lm, m);
        let right = simpson(f, m, rm, b);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            recurse(f, a, lm, m, left, tol / 2.0, depth - 1)
                + recurse(f, m, rm, b, right, tol / 2.0, depth - 1)
        }
    }
    let m = 0.5 * (a + b);
    recurse(f, a, m, b, simpson(f, a, m, b), tol, 40)
}

/// int_a^inf e^{-b x^2} dx via the complementary error function.
pub fn gaussian_tail(a: f64, b: f64) -> f64 {
    0.5 * (std::f64::consts::PI / b).sqrt() * statrs::function::erf::erfc(a * b.sqrt())
}

/// Plain conjugate gradients on the interior generator A/h^d (SPD for a
/// Dirichlet stiffness matrix), solving generator * x = rhs.
fn cg_generator(op: &StiffnessOperator, rhs: &[f64], rel_tol: f64) -> Vec<f64> {
    let n = rhs.len();
    let mut x = vec![0.0; n];
    let mut r = rhs.to_vec();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let rhs_norm = rhs.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
    let mut rs: f64 = r.iter().map(|v| v * v).sum();
    for _ in 0..20 * n {
        if rs.sqrt() <= rel_tol * rhs_norm {
            break;
        }
        op.apply_generator(&p, &mut ap);
        let denom: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        let alpha = rs / denom;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rs_new: f64 = r.iter().map(|v| v * v).sum();
        let beta = rs_new / rs;
        rs = rs_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    x
}

/// Smallest eigenpair of the interior generator by inverse iteration.
///
/// Returns (lambda_1, v) with ||v||_2 = 1 in the interior coordinates.
pub fn smallest_eigenpair(op: &StiffnessOperator) -> (f64, Vec<f64>) {
    let n = op.interior_dim();
    // Deterministic, nowhere-orthogonal start.
    let mut v: Vec<f64> = (0..n)
        .map(|i| 1.0 + 0.3 * ((i as f64 * 0.7318).sin()))
        .collect();
    let norm = |u: &[f64]| u.iter().map(|x| x * x).sum::<f64>().sqrt();
    let s = norm(&v);
    v.iter_mut().for_each(|x| *x /= s);
    let mut lambda = 0.0;
    let mut av = vec![0.0; n];
    for _ in 0..200 {
        let w = cg_generator(op, &v, 1e-12);
        let s = norm(&w);
        let mut next: Vec<f64> = w.iter().map(|x| x / s).collect();
        // Fix the sign for comparability between iterations.
        if next[0] < 0.0 {
            next.iter_mut().for_each(|x| *x = -*x);
        }
        op.apply_generator(&next, &mut av);
        let new_lambda: f64 = next.iter().zip(&av).map(|(a, b)| a * b).sum();
        let moved: f64 = next
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        v = next;
        let done = (new_lambda - lambda).abs() <= 1e-13 * new_lambda.max(1.0) && moved <= 1e-10;
        lambda = new_lambda;
        if done {
            break;
        }
    }
    (lambda, v)
}

#[cfg(test)]
mod oracle_self_tests {
    use super::*;

    #[test]
    fn quartic_integral_matches_frozen_value() {
        // Split at 1 and substitute t -> 1/u on the tail so the oracle
        // integrates two finite smooth pieces:
        // int_1^inf (1+t^4)^{-1/2} dt = int_0^1 (1+u^4)^{-1/2} du.
        let head = adaptive_simpson(&|t: f64| (1.0 + t.powi(4)).powf(-0.5), 0.0, 1.0, 1e-13);
        assert!((2.0 * head - QUARTIC_INTEGRAL).abs() < 1e-12);
    }

    #[test]
    fn gaussian_tail_matches_quadrature() {
        let direct = adaptive_simpson(&|x: f64| (-0.7 * x * x).exp(), 1.3, 30.0, 1e-13);
        assert!((gaussian_tail(1.3, 0.7) - direct).abs() < 1e-11);
    }
}
