//! The epsilon-regularized family C + eps I: pairwise semigroup distances
//! along a decreasing epsilon list and quadratic-form monotonicity.

use super::evolve::{evolve, EvolveOptions, SemigroupError};
use super::lanczos::dist;
use crate::coeff::CoefficientField;
use crate::disc::{assemble_stiffness, quadratic_form, Grid, GridFunction};

/// One row of the comparison table.
#[derive(Debug, Clone)]
pub struct EpsilonRow {
    pub epsilon: f64,
    /// Energy of the initial datum under H_eps.
    pub form_value: f64,
    /// ||S^{(eps_prev)}_t v0 - S^{(eps)}_t v0||_2 against the previous
    /// (larger) epsilon; None for the first row.
    pub distance_to_previous: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct EpsilonFamilyReport {
    pub t: f64,
    pub rows: Vec<EpsilonRow>,
    /// Whether consecutive distances decrease monotonically (the Cauchy
    /// trend expected from strong-resolvent convergence of the family).
    pub cauchy_trend: bool,
    /// Whether the form values are non-increasing as epsilon decreases
    /// (exact for the factored assembly, up to roundoff).
    pub form_monotone: bool,
}

/// Evolve `v0` under H_eps for each epsilon in `eps_list` and tabulate
/// consecutive L2 distances and quadratic-form values.
///
/// `eps_list` must be strictly decreasing with minimum >= 0; the field must
/// be PSD on the grid (checked during assembly).
pub fn epsilon_family_compare(
    field: &CoefficientField,
    grid: &Grid,
    v0: &GridFunction,
    t: f64,
    eps_list: &[f64],
    opts: &EvolveOptions,
) -> Result<EpsilonFamilyReport, SemigroupError> {
    if eps_list.is_empty() {
        return Err(SemigroupError::Precondition(
            "epsilon list is empty".to_string(),
        ));
    }
    if eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(SemigroupError::Precondition(format!(
            "epsilon list must be strictly decreasing, got {eps_list:?}"
        )));
    }
    if *eps_list.last().unwrap() < 0.0 {
        return Err(SemigroupError::Precondition(
            "epsilon values must be >= 0".to_string(),
        ));
    }

    let mut rows: Vec<EpsilonRow> = Vec::with_capacity(eps_list.len());
    let mut previous: Option<GridFunction> = None;
    for &eps in eps_list {
        let op = assemble_stiffness(field, grid, eps).map_err(SemigroupError::Disc)?;
        let form_value = quadratic_form(&op, v0).map_err(SemigroupError::Disc)?;
        let evolved = evolve(&op, v0, t, opts)?.result;
        let distance_to_previous = previous
            .as_ref()
            .map(|p| dist(p.values(), evolved.values()) * grid.cell_volume().sqrt());
        rows.push(EpsilonRow {
            epsilon: eps,
            form_value,
            distance_to_previous,
        });
        previous = Some(evolved);
    }

    let distances: Vec<f64> = rows
        .iter()
        .filter_map(|r| r.distance_to_previous)
        .collect();
    let cauchy_trend = distances.windows(2).all(|w| w[1] <= w[0]);
    let form_monotone = rows
        .windows(2)
        .all(|w| w[1].form_value <= w[0].form_value + 1e-12 * w[0].form_value.abs().max(1.0));

    Ok(EpsilonFamilyReport {
        t,
        rows,
        cauchy_trend,
        form_monotone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn bump(grid: &Grid) -> GridFunction {
        GridFunction::from_fn(grid, |x| {
            let u: f64 = 1.0 - x[0] * x[0];
            u.max(0.0).powi(2)
        })
    }

    #[test]
    fn rejects_bad_epsilon_lists() {
        let field = CoefficientField::identity(1);
        let grid = Grid::build(1, 2.0, 41).unwrap();
        let v0 = bump(&grid);
        let opts = EvolveOptions::default();
        assert!(epsilon_family_compare(&field, &grid, &v0, 0.1, &[], &opts).is_err());
        assert!(
            epsilon_family_compare(&field, &grid, &v0, 0.1, &[0.1, 0.1], &opts).is_err()
        );
        assert!(
            epsilon_family_compare(&field, &grid, &v0, 0.1, &[0.1, -0.1], &opts).is_err()
        );
    }

    #[test]
    fn identity_field_scales_like_scaled_laplacian() {
        // C = I: H_eps = (1+eps) * Laplacian; distances positive and
        // decreasing along the list.
        let field = CoefficientField::identity(1);
        let grid = Grid::build(1, 4.0, 161).unwrap();
        let v0 = bump(&grid);
        let r = epsilon_family_compare(
            &field,
            &grid,
            &v0,
            0.2,
            &[0.1, 0.05, 0.025, 0.0125],
            &EvolveOptions::default(),
        )
        .unwrap();
        assert!(r.cauchy_trend);
        assert!(r.form_monotone);
        for row in &r.rows[1..] {
            assert!(row.distance_to_previous.unwrap() > 0.0);
        }
        // Form value scales exactly: v (1+eps) A v.
        let last = r.rows.last().unwrap();
        let base = last.form_value / (1.0 + last.epsilon);
        for row in &r.rows {
            assert_relative_eq!(
                row.form_value,
                (1.0 + row.epsilon) * base,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn degenerate_field_is_cauchy() {
        let field = CoefficientField::isotropic(1, "x1^2", "degenerate").unwrap();
        let grid = Grid::build(1, 3.0, 121).unwrap();
        let v0 = bump(&grid);
        let r = epsilon_family_compare(
            &field,
            &grid,
            &v0,
            0.2,
            &[0.1, 0.05, 0.025, 0.0125],
            &EvolveOptions::default(),
        )
        .unwrap();
        assert!(r.cauchy_trend, "distances {:?}", r.rows.iter().map(|x| x.distance_to_previous).collect::<Vec<_>>());
        assert!(r.form_monotone);
    }
}
