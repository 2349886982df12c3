//! The oscillating-test-function identity: with
//! phi_{c,k}(x) = cos(k x.xi) phi(x) and phi_{s,k}(x) = sin(k x.xi) phi(x),
//! int (xi, C(x) xi) |phi|^2 dx = lim_{k->inf} k^{-2} (h(phi_{c,k}) + h(phi_{s,k})),
//! and in the continuum the finite-k deviation is exactly k^{-2} h(phi).

use super::AnalysisError;
use crate::coeff::CoefficientField;
use crate::disc::{assemble_stiffness, quadratic_form, Grid, GridFunction};

#[derive(Debug, Clone)]
pub struct OscillationRow {
    pub k: f64,
    /// (h(phi_{c,k}) + h(phi_{s,k})) / ktilde^2, where ktilde^2 is the
    /// discrete plane-wave symbol (equal to k^2 + O(k^4 h^2)).
    pub value: f64,
    /// value - reference.
    pub deviation: f64,
    /// The continuum prediction for the deviation: k^{-2} h(phi).
    pub model_deviation: f64,
}

#[derive(Debug, Clone)]
pub struct OscillationTable {
    pub rows: Vec<OscillationRow>,
    /// Direct midpoint quadrature of int (xi, C(x) xi) |phi(x)|^2 dx.
    pub reference: f64,
    /// h(phi), the energy of the unmodulated test function.
    pub h_phi: f64,
    /// Richardson extrapolation in k^{-2} from the two largest k values
    /// (None with fewer than two rows).
    pub extrapolated: Option<f64>,
}

/// Evaluate the identity for each k in `k_list`.
///
/// `phi` must be compactly supported in the inner half of the box and every
/// k must respect the resolution guard k <= pi / (8h).
pub fn oscillation_extract(
    field: &CoefficientField,
    grid: &Grid,
    phi: &GridFunction,
    xi: &[f64],
    k_list: &[f64],
) -> Result<OscillationTable, AnalysisError> {
    let d = grid.dimension();
    if xi.len() != d {
        return Err(AnalysisError::Precondition(format!(
            "direction has dimension {}, grid has {d}",
            xi.len()
        )));
    }
    let xi_norm: f64 = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
    if (xi_norm - 1.0).abs() > 1e-12 {
        return Err(AnalysisError::Precondition(format!(
            "direction must be a unit vector, |xi| = {xi_norm}"
        )));
    }
    if phi.grid() != grid {
        return Err(AnalysisError::Precondition(
            "phi lives on a different grid".to_string(),
        ));
    }
    // At least 8 grid points per wavelength: k h <= 2 pi / 8.
    let k_limit = std::f64::consts::PI / (4.0 * grid.spacing());
    for &k in k_list {
        if !(k > 0.0) || k > k_limit {
            return Err(AnalysisError::ResolutionGuard { k, limit: k_limit });
        }
    }

    // Support guard: phi vanishes outside the inner half of the box.
    let l = grid.half_width();
    let sup = phi.sup_norm();
    let mut x = vec![0.0; d];
    for (i, &v) in phi.values().iter().enumerate() {
        grid.node_coord(i, &mut x);
        if x.iter().any(|&xi_c| xi_c.abs() > l / 2.0 + 1e-12) && v.abs() > 1e-14 * sup.max(1.0) {
            return Err(AnalysisError::Precondition(format!(
                "phi is not supported in the inner half of the box (value {v:.3e} at {x:?})"
            )));
        }
    }

    let op = assemble_stiffness(field, grid, 0.0)?;
    let h_phi = quadratic_form(&op, phi)?;

    // Reference by midpoint quadrature, consistent with the assembly's
    // cell-midpoint sampling of C: sum over cells of
    // (xi, C(mid) xi) * mean(phi over corners)^2 * vol.
    let vol = grid.cell_volume();
    let corners = 1usize << d;
    let mut mid = vec![0.0; d];
    let mut reference = 0.0;
    for cell in 0..grid.cell_count() {
        grid.cell_midpoint(cell, &mut mid);
        let c = field.eval_matrix(&mid)?;
        let mut quad = 0.0;
        for i in 0..d {
            for j in 0..d {
                quad += xi[i] * c[(i, j)] * xi[j];
            }
        }
        let base = grid.cell_corner(cell);
        let mut phi_mid = 0.0;
        for mask in 0..corners {
            let mut node = base;
            for axis in 0..d {
                if mask & (1 << axis) != 0 {
                    node += grid.stride(axis);
                }
            }
            phi_mid += phi.values()[node];
        }
        phi_mid /= corners as f64;
        reference += quad * phi_mid * phi_mid * vol;
    }

    let mut rows = Vec::with_capacity(k_list.len());
    let h = grid.spacing();
    for &k in k_list {
        // Discrete symbol of the plane wave on the lattice: forward
        // differences turn e^{ikx} into eigenvalue sum_i 2(1-cos(k xi_i h))/h^2
        // rather than k^2. Normalizing by it makes the trigonometric
        // cancellation exact on the grid (for lattice-aligned xi), leaving
        // only the O((kh)^2) quadrature mismatch against the reference.
        let ktilde2: f64 = xi
            .iter()
            .map(|&c| 2.0 * (1.0 - (k * c * h).cos()) / (h * h))
            .sum();
        let modulate = |trig: fn(f64) -> f64| {
            let mut out = GridFunction::zeros(grid);
            let mut y = vec![0.0; d];
            for (i, o) in out.values_mut().iter_mut().enumerate() {
                grid.node_coord(i, &mut y);
                let phase: f64 = k * y.iter().zip(xi).map(|(&a, &b)| a * b).sum::<f64>();
                *o = trig(phase) * phi.values()[i];
            }
            out
        };
        let phi_c = modulate(f64::cos);
        let phi_s = modulate(f64::sin);
        let value = (quadratic_form(&op, &phi_c)? + quadratic_form(&op, &phi_s)?) / ktilde2;
        rows.push(OscillationRow {
            k,
            value,
            deviation: value - reference,
            model_deviation: h_phi / (k * k),
        });
    }

    // Richardson in k^{-2} from the two largest k.
    let extrapolated = if rows.len() >= 2 {
        let mut sorted: Vec<&OscillationRow> = rows.iter().collect();
        sorted.sort_by(|a, b| a.k.partial_cmp(&b.k).unwrap());
        let r1 = sorted[sorted.len() - 2];
        let r2 = sorted[sorted.len() - 1];
        let (k1, k2) = (r1.k, r2.k);
        Some((r2.value * k2 * k2 - r1.value * k1 * k1) / (k2 * k2 - k1 * k1))
    } else {
        None
    };

    Ok(OscillationTable {
        rows,
        reference,
        h_phi,
        extrapolated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn bump(grid: &Grid) -> GridFunction {
        let l = grid.half_width();
        GridFunction::from_fn(grid, |x| {
            x.iter()
                .map(|&xi| {
                    let u: f64 = 1.0 - (2.5 * xi / l) * (2.5 * xi / l);
                    u.max(0.0).powi(3)
                })
                .product()
        })
    }

    #[test]
    fn identity_field_deviation_matches_model() {
        let field = CoefficientField::identity(1);
        let grid = Grid::build(1, 10.0, 801).unwrap();
        let phi = bump(&grid);
        let t = oscillation_extract(&field, &grid, &phi, &[1.0], &[4.0, 8.0, 16.0]).unwrap();
        // Reference = int |phi|^2 for C = I.
        let phi2: f64 = phi.values().iter().map(|v| v * v).sum::<f64>() * grid.cell_volume();
        assert_relative_eq!(t.reference, phi2, max_relative = 1e-3);
        for row in &t.rows {
            assert_relative_eq!(row.deviation, row.model_deviation, max_relative = 0.05);
        }
    }

    #[test]
    fn constant_field_scales_reference() {
        let field = CoefficientField::isotropic(1, "3", "three").unwrap();
        let grid = Grid::build(1, 10.0, 401).unwrap();
        let phi = bump(&grid);
        let t3 = oscillation_extract(&field, &grid, &phi, &[1.0], &[4.0]).unwrap();
        let t1 = oscillation_extract(
            &CoefficientField::identity(1),
            &grid,
            &phi,
            &[1.0],
            &[4.0],
        )
        .unwrap();
        assert_relative_eq!(t3.reference, 3.0 * t1.reference, max_relative = 1e-12);
    }

    #[test]
    fn sinusoidal_field_extrapolates_to_reference() {
        let field = CoefficientField::isotropic(1, "1.5+0.5*sin(x1)", "sin").unwrap();
        let grid = Grid::build(1, 10.0, 801).unwrap();
        let phi = bump(&grid);
        let t = oscillation_extract(&field, &grid, &phi, &[1.0], &[4.0, 8.0, 16.0]).unwrap();
        let limit = t.extrapolated.unwrap();
        assert_relative_eq!(limit, t.reference, max_relative = 0.01);
    }

    #[test]
    fn resolution_guard_fires() {
        let field = CoefficientField::identity(1);
        let grid = Grid::build(1, 10.0, 101).unwrap();
        let phi = bump(&grid);
        // h = 0.2, limit = pi/1.6 ~ 1.96.
        assert!(matches!(
            oscillation_extract(&field, &grid, &phi, &[1.0], &[4.0]),
            Err(AnalysisError::ResolutionGuard { .. })
        ));
    }

    #[test]
    fn support_guard_fires() {
        let field = CoefficientField::identity(1);
        let grid = Grid::build(1, 10.0, 401).unwrap();
        let wide = GridFunction::from_fn(&grid, |x| {
            let u: f64 = 1.0 - (x[0] / 10.0) * (x[0] / 10.0);
            u.max(0.0)
        });
        assert!(oscillation_extract(&field, &grid, &wide, &[1.0], &[1.0]).is_err());
    }

    #[test]
    fn non_unit_direction_rejected() {
        let field = CoefficientField::identity(1);
        let grid = Grid::build(1, 10.0, 401).unwrap();
        let phi = bump(&grid);
        assert!(oscillation_extract(&field, &grid, &phi, &[2.0], &[1.0]).is_err());
    }
}
