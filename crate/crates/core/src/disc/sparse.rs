//! Minimal CSR sparse matrix with the operations the solvers need.

use std::fmt::Write as _;

/// Compressed sparse row matrix (square, f64).
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Build from per-row triplet lists. Duplicate column entries within a
    /// row are summed in insertion order, which keeps assembly deterministic.
    pub fn from_rows(n: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        assert_eq!(rows.len(), n);
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        let mut scratch: Vec<(usize, f64)> = Vec::new();
        for row in rows {
            scratch.clear();
            // Stable sort by column; equal columns stay in insertion order so
            // the subsequent summation order is reproducible.
            let mut entries = row;
            entries.sort_by_key(|e| e.0);
            for (c, v) in entries {
                match scratch.last_mut() {
                    Some(last) if last.0 == c => last.1 += v,
                    _ => scratch.push((c, v)),
                }
            }
            for &(c, v) in &scratch {
                col_idx.push(c);
                vals.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix {
            n,
            row_ptr,
            col_idx,
            vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// y = A x.
    pub fn mul_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for i in 0..self.n {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.col_idx[k]];
            }
            y[i] = acc;
        }
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_into(x, &mut y);
        y
    }

    /// x' A x.
    pub fn quadratic(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            let mut row = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                row += self.vals[k] * x[self.col_idx[k]];
            }
            acc += x[i] * row;
        }
        acc
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                if self.col_idx[k] == i {
                    d[i] = self.vals[k];
                }
            }
        }
        d
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        for k in self.row_ptr[i]..self.row_ptr[i + 1] {
            if self.col_idx[k] == j {
                return self.vals[k];
            }
        }
        0.0
    }

    /// Largest |A_ij - A_ji| over stored entries.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                worst = worst.max((self.vals[k] - self.entry(j, i)).abs());
            }
        }
        worst
    }

    /// Coordinate-list text dump (row, col, value), one entry per line.
    pub fn to_coo_text(&self) -> String {
        let mut out = String::new();
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                writeln!(out, "{} {} {:.17e}", i, self.col_idx[k], self.vals[k]).unwrap();
            }
        }
        out
    }

    /// Gershgorin upper bound on the spectrum.
    pub fn gershgorin_max(&self) -> f64 {
        let mut bound = 0.0f64;
        for i in 0..self.n {
            let mut center = 0.0;
            let mut radius = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                if self.col_idx[k] == i {
                    center = self.vals[k];
                } else {
                    radius += self.vals[k].abs();
                }
            }
            bound = bound.max(center + radius);
        }
        bound
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> CsrMatrix {
        // [2 -1 0; -1 2 -1; 0 -1 2]
        CsrMatrix::from_rows(
            3,
            vec![
                vec![(0, 2.0), (1, -1.0)],
                vec![(0, -1.0), (1, 2.0), (2, -1.0)],
                vec![(1, -1.0), (2, 2.0)],
            ],
        )
    }

    #[test]
    fn matvec() {
        let a = sample();
        assert_eq!(a.mul(&[1.0, 1.0, 1.0]), vec![1.0, 0.0, 1.0]);
    }

    #[test]
    fn quadratic_matches_matvec() {
        let a = sample();
        let x = [1.0, -2.0, 0.5];
        let y = a.mul(&x);
        let dot: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        assert_eq!(a.quadratic(&x), dot);
    }

    #[test]
    fn duplicate_entries_sum() {
        let a = CsrMatrix::from_rows(1, vec![vec![(0, 1.0), (0, 2.0)]]);
        assert_eq!(a.entry(0, 0), 3.0);
        assert_eq!(a.nnz(), 1);
    }

    #[test]
    fn symmetry_defect_zero_for_symmetric() {
        assert_eq!(sample().symmetry_defect(), 0.0);
    }

    #[test]
    fn gershgorin_bound() {
        assert_eq!(sample().gershgorin_max(), 4.0);
    }
}
