//! Jacobi-preconditioned conjugate gradients for the implicit substeps of
//! the trapezoidal fallback integrator.

use super::lanczos::{axpy, dot, norm};

#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

/// Solve A x = b for symmetric positive definite A, overwriting `x` with the
/// solution (the incoming `x` is the initial guess).
pub fn solve_cg(
    apply: &mut dyn FnMut(&[f64], &mut [f64]),
    diag: &[f64],
    b: &[f64],
    x: &mut [f64],
    rel_tol: f64,
    max_iter: usize,
) -> CgOutcome {
    let n = b.len();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.fill(0.0);
        return CgOutcome {
            iterations: 0,
            relative_residual: 0.0,
            converged: true,
        };
    }
    let inv_diag: Vec<f64> = diag.iter().map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 }).collect();

    let mut r = vec![0.0; n];
    apply(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];

    for it in 0..max_iter {
        let rnorm = norm(&r);
        if rnorm <= rel_tol * bnorm {
            return CgOutcome {
                iterations: it,
                relative_residual: rnorm / bnorm,
                converged: true,
            };
        }
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let alpha = rz / pap;
        axpy(x, alpha, &p);
        axpy(&mut r, -alpha, &ap);
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let rnorm = norm(&r);
    CgOutcome {
        iterations: max_iter,
        relative_residual: rnorm / bnorm,
        converged: rnorm <= rel_tol * bnorm,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn solves_tridiagonal_system() {
        let n = 50;
        let mut apply = |x: &[f64], y: &mut [f64]| {
            for i in 0..n {
                let mut acc = 3.0 * x[i];
                if i > 0 {
                    acc -= x[i - 1];
                }
                if i + 1 < n {
                    acc -= x[i + 1];
                }
                y[i] = acc;
            }
        };
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64 * 0.1).cos()).collect();
        let mut b = vec![0.0; n];
        apply(&x_true, &mut b);
        let diag = vec![3.0; n];
        let mut x = vec![0.0; n];
        let out = solve_cg(&mut apply, &diag, &b, &mut x, 1e-12, 500);
        assert!(out.converged);
        for (a, e) in x.iter().zip(&x_true) {
            assert_relative_eq!(a, e, epsilon = 1e-9);
        }
    }

    #[test]
    fn zero_rhs() {
        let mut apply = |x: &[f64], y: &mut [f64]| y.copy_from_slice(x);
        let mut x = vec![1.0; 4];
        let out = solve_cg(&mut apply, &[1.0; 4], &[0.0; 4], &mut x, 1e-10, 10);
        assert!(out.converged);
        assert_eq!(x, vec![0.0; 4]);
    }
}
