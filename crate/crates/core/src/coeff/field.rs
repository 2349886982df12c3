//! Matrix-valued coefficient fields C(x) and pointwise diagnostics.

use nalgebra::DMatrix;
use thiserror::Error;

use super::expr::{EvalError, ParseError, ScalarFieldExpr};
use crate::analysis::EllipticityEstimate;

/// Relative tolerance for the positive-semidefiniteness check: the smallest
/// eigenvalue may not drop below `-PSD_TOL * ||C(x)||`.
pub const PSD_TOL: f64 = 1e-12;

/// Symmetric matrix field x -> C(x) in dimension 1..3, stored as the upper
/// triangle of scalar expressions so symmetry holds by construction.
#[derive(Debug, Clone)]
pub struct CoefficientField {
    d: usize,
    /// Row-major upper triangle: (0,0), (0,1), .., (0,d-1), (1,1), ..
    entries: Vec<ScalarFieldExpr>,
    label: String,
}

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("dimension {0} out of range 1..=3")]
    BadDimension(usize),
    #[error("expected {expected} upper-triangle entries for d={d}, got {got}")]
    WrongEntryCount { d: usize, expected: usize, got: usize },
    #[error("entry ({i},{j}): {source}")]
    Parse {
        i: usize,
        j: usize,
        source: ParseError,
    },
    #[error("evaluation failed: {0}")]
    Eval(#[from] EvalError),
    #[error(
        "C(x) not positive semidefinite at x = {point:?}: min eigenvalue {min_eig:.3e} < -{tol:.3e}"
    )]
    NotPsd {
        point: Vec<f64>,
        min_eig: f64,
        tol: f64,
    },
}

impl CoefficientField {
    /// Build from upper-triangle expression strings, row-major.
    pub fn from_exprs(d: usize, texts: &[&str], label: &str) -> Result<Self, FieldError> {
        if !(1..=3).contains(&d) {
            return Err(FieldError::BadDimension(d));
        }
        let expected = d * (d + 1) / 2;
        if texts.len() != expected {
            return Err(FieldError::WrongEntryCount {
                d,
                expected,
                got: texts.len(),
            });
        }
        let mut entries = Vec::with_capacity(expected);
        let mut k = 0;
        for i in 0..d {
            for j in i..d {
                let e = ScalarFieldExpr::parse(texts[k], d)
                    .map_err(|source| FieldError::Parse { i, j, source })?;
                entries.push(e);
                k += 1;
            }
        }
        Ok(CoefficientField {
            d,
            entries,
            label: label.to_string(),
        })
    }

    /// Isotropic field c(x) * I from a single scalar expression.
    pub fn isotropic(d: usize, c_text: &str, label: &str) -> Result<Self, FieldError> {
        if !(1..=3).contains(&d) {
            return Err(FieldError::BadDimension(d));
        }
        let c = ScalarFieldExpr::parse(c_text, d)
            .map_err(|source| FieldError::Parse { i: 0, j: 0, source })?;
        let zero = ScalarFieldExpr::constant(0.0, d);
        let mut entries = Vec::new();
        for i in 0..d {
            for j in i..d {
                entries.push(if i == j { c.clone() } else { zero.clone() });
            }
        }
        Ok(CoefficientField {
            d,
            entries,
            label: label.to_string(),
        })
    }

    /// The identity field C = I.
    pub fn identity(d: usize) -> Self {
        Self::isotropic(d, "1", "identity").expect("static field")
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    fn upper_index(&self, i: usize, j: usize) -> usize {
        // Row-major upper triangle with i <= j.
        let d = self.d;
        i * d - i * (i + 1) / 2 + j
    }

    /// The stored expression for entry (i, j) (order-insensitive).
    pub fn entry(&self, i: usize, j: usize) -> &ScalarFieldExpr {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        &self.entries[self.upper_index(i, j)]
    }

    /// Evaluate C(x) as a dense symmetric d x d matrix. The (i,j) and (j,i)
    /// entries are the same stored expression, so symmetry is exact.
    pub fn eval_matrix(&self, x: &[f64]) -> Result<DMatrix<f64>, FieldError> {
        let d = self.d;
        let mut m = DMatrix::zeros(d, d);
        for i in 0..d {
            for j in i..d {
                let v = self.entries[self.upper_index(i, j)].eval(x)?;
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Ok(m)
    }

    /// Spectral norm ||C(x)|| (largest absolute eigenvalue).
    pub fn spectral_norm(&self, x: &[f64]) -> Result<f64, FieldError> {
        let (lo, hi) = self.eig_range(x)?;
        Ok(lo.abs().max(hi.abs()))
    }

    /// (min, max) eigenvalue of C(x).
    pub fn eig_range(&self, x: &[f64]) -> Result<(f64, f64), FieldError> {
        let m = self.eval_matrix(x)?;
        if self.d == 1 {
            return Ok((m[(0, 0)], m[(0, 0)]));
        }
        let eigs = m.symmetric_eigenvalues();
        let lo = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = eigs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Ok((lo, hi))
    }

    /// Check the PSD invariant at a point; errors if the smallest eigenvalue
    /// is below `-PSD_TOL * ||C(x)||`.
    pub fn check_psd(&self, x: &[f64]) -> Result<(), FieldError> {
        let (lo, hi) = self.eig_range(x)?;
        let norm = lo.abs().max(hi.abs());
        let tol = PSD_TOL * norm.max(1.0);
        if lo < -tol {
            return Err(FieldError::NotPsd {
                point: x.to_vec(),
                min_eig: lo,
                tol,
            });
        }
        Ok(())
    }
}

/// Scan the field's eigenvalue range over a sample lattice on the box
/// `[-half_width, half_width]^d`.
///
/// Returns the min/max eigenvalues over all samples with the attaining
/// points. A PSD violation anywhere on the lattice is an error.
pub fn ellipticity_scan(
    field: &CoefficientField,
    half_width: f64,
    samples_per_axis: usize,
) -> Result<ScanResult, FieldError> {
    assert!(samples_per_axis >= 2, "need at least 2 samples per axis");
    let d = field.dimension();
    let total = samples_per_axis.pow(d as u32);
    let mut mu = f64::INFINITY;
    let mut lambda = f64::NEG_INFINITY;
    let mut mu_at = vec![0.0; d];
    let mut lambda_at = vec![0.0; d];
    let mut x = vec![0.0; d];
    for flat in 0..total {
        let mut rem = flat;
        for xi in x.iter_mut() {
            let idx = rem % samples_per_axis;
            rem /= samples_per_axis;
            *xi = -half_width + 2.0 * half_width * idx as f64 / (samples_per_axis - 1) as f64;
        }
        field.check_psd(&x)?;
        let (lo, hi) = field.eig_range(&x)?;
        if lo < mu {
            mu = lo;
            mu_at.copy_from_slice(&x);
        }
        if hi > lambda {
            lambda = hi;
            lambda_at.copy_from_slice(&x);
        }
    }
    Ok(ScanResult {
        estimate: EllipticityEstimate::scanned(mu, lambda),
        mu_at,
        lambda_at,
    })
}

/// Result of [`ellipticity_scan`]: the eigenvalue range and where it is attained.
#[derive(Debug, Clone)]
pub struct ScanResult {
    pub estimate: EllipticityEstimate,
    pub mu_at: Vec<f64>,
    pub lambda_at: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn identity_field_everywhere() {
        let f = CoefficientField::identity(2);
        let m = f.eval_matrix(&[0.3, -0.7]).unwrap();
        assert_eq!(m, DMatrix::identity(2, 2));
    }

    #[test]
    fn diagonal_sinusoidal() {
        let f = CoefficientField::from_exprs(2, &["1", "0", "2+sin(x1)"], "diag").unwrap();
        let m = f.eval_matrix(&[std::f64::consts::FRAC_PI_2, 0.0]).unwrap();
        assert_relative_eq!(m[(0, 0)], 1.0);
        assert_relative_eq!(m[(1, 1)], 3.0, epsilon = 1e-14);
        assert_eq!(m[(0, 1)], 0.0);
    }

    #[test]
    fn constant_offdiagonal_symmetry_exact() {
        let f = CoefficientField::from_exprs(2, &["1", "0.5", "1"], "aniso").unwrap();
        let m = f.eval_matrix(&[1.0, 2.0]).unwrap();
        assert_eq!(m[(0, 1)].to_bits(), m[(1, 0)].to_bits());
        assert_eq!(m[(0, 1)], 0.5);
    }

    #[test]
    fn scan_identity() {
        let f = CoefficientField::identity(2);
        let r = ellipticity_scan(&f, 1.0, 5).unwrap();
        assert_eq!(r.estimate.mu, 1.0);
        assert_eq!(r.estimate.lambda, 1.0);
    }

    #[test]
    fn scan_sinusoidal_hits_extremes() {
        // Box contains +-pi/2 where 2+sin ranges over [1,3].
        let f = CoefficientField::from_exprs(2, &["1", "0", "2+sin(x1)"], "diag").unwrap();
        let r = ellipticity_scan(&f, std::f64::consts::PI, 201).unwrap();
        assert_relative_eq!(r.estimate.mu, 1.0, epsilon = 1e-3);
        assert_relative_eq!(r.estimate.lambda, 3.0, epsilon = 1e-3);
    }

    #[test]
    fn scan_constant_anisotropic() {
        let f = CoefficientField::from_exprs(2, &["1", "0.5", "1"], "aniso").unwrap();
        let r = ellipticity_scan(&f, 1.0, 3).unwrap();
        assert_relative_eq!(r.estimate.mu, 0.5, epsilon = 1e-12);
        assert_relative_eq!(r.estimate.lambda, 1.5, epsilon = 1e-12);
    }

    #[test]
    fn scan_rejects_indefinite_field() {
        let f = CoefficientField::from_exprs(2, &["1", "2", "1"], "bad").unwrap();
        assert!(matches!(
            ellipticity_scan(&f, 1.0, 3),
            Err(FieldError::NotPsd { .. })
        ));
    }

    #[test]
    fn eval_error_propagates() {
        let f = CoefficientField::isotropic(1, "1/x1", "sing").unwrap();
        assert!(f.eval_matrix(&[0.0]).is_err());
        assert!(f.eval_matrix(&[1.0]).is_ok());
    }
}
