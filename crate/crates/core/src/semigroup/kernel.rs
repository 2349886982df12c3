//! Heat-kernel slices K_t(., y) and mass-conservation defects.

use super::evolve::{evolve, EvolveOptions, SemigroupError};
use crate::disc::{GridFunction, StiffnessOperator};

/// One kernel slice x -> K_t(x, y): the evolved density of a unit point mass
/// placed at the grid node nearest to the requested source.
#[derive(Debug, Clone)]
pub struct KernelSlice {
    pub density: GridFunction,
    /// Flat index of the source node actually used.
    pub source_node: usize,
    /// Coordinates of the source node.
    pub source: Vec<f64>,
    pub t: f64,
    /// Total mass of the slice; at most 1 for a submarkovian semigroup.
    pub mass: f64,
    pub max_negative_excursion: f64,
}

/// Mass of the slice may exceed 1 by at most this much before the run is
/// treated as a solver failure.
const MASS_TOL: f64 = 1e-8;

/// Locate the grid node nearest to `point`; errors if it is not interior.
pub fn nearest_interior_node(
    grid: &crate::disc::Grid,
    point: &[f64],
) -> Result<usize, SemigroupError> {
    if point.len() != grid.dimension() {
        return Err(SemigroupError::Precondition(format!(
            "source point has dimension {}, grid has {}",
            point.len(),
            grid.dimension()
        )));
    }
    let n = grid.nodes_per_axis();
    let h = grid.spacing();
    let mut multi = vec![0usize; grid.dimension()];
    for (i, &x) in point.iter().enumerate() {
        let idx = ((x + grid.half_width()) / h).round();
        if !(0.0..=(n - 1) as f64).contains(&idx) {
            return Err(SemigroupError::Precondition(format!(
                "source coordinate {x} lies outside the box of half width {}",
                grid.half_width()
            )));
        }
        multi[i] = idx as usize;
    }
    let flat = grid.flat(&multi);
    if !grid.is_interior(flat) {
        return Err(SemigroupError::Precondition(
            "source node lies on the Dirichlet boundary".to_string(),
        ));
    }
    Ok(flat)
}

/// Compute the kernel slice K_t(., y) for the source nearest to `source`.
///
/// The initial datum is the discrete delta e_y / h^d, so the evolved vector
/// approximates the kernel density directly and its weighted sum is the mass.
pub fn heat_kernel_slice(
    op: &StiffnessOperator,
    source: &[f64],
    t: f64,
    opts: &EvolveOptions,
) -> Result<KernelSlice, SemigroupError> {
    let grid = op.grid();
    let node = nearest_interior_node(grid, source)?;
    let mut coords = vec![0.0; grid.dimension()];
    grid.node_coord(node, &mut coords);

    let mut v0 = GridFunction::zeros(grid);
    v0.values_mut()[node] = 1.0 / grid.cell_volume();
    let report = evolve(op, &v0, t, opts)?;

    let mass = report.result.integral();
    if mass > 1.0 + MASS_TOL {
        return Err(SemigroupError::Precondition(format!(
            "kernel slice mass {mass} exceeds 1 beyond tolerance; solver accuracy insufficient"
        )));
    }

    Ok(KernelSlice {
        density: report.result,
        source_node: node,
        source: coords,
        t,
        mass,
        max_negative_excursion: report.max_negative_excursion,
    })
}

impl KernelSlice {
    /// Kernel value at the node nearest to `point`.
    pub fn value_at(&self, point: &[f64]) -> Result<f64, SemigroupError> {
        let grid = self.density.grid();
        let node = nearest_interior_node(grid, point)?;
        Ok(self.density.values()[node])
    }
}

/// Relative symmetry defect |K_t(x,y) - K_t(y,x)| / sup K between two slices.
pub fn kernel_symmetry_defect(
    op: &StiffnessOperator,
    x: &[f64],
    y: &[f64],
    t: f64,
    opts: &EvolveOptions,
) -> Result<f64, SemigroupError> {
    let from_y = heat_kernel_slice(op, y, t, opts)?;
    let from_x = heat_kernel_slice(op, x, t, opts)?;
    let kxy = from_y.value_at(x)?;
    let kyx = from_x.value_at(y)?;
    let scale = from_y
        .density
        .sup_norm()
        .max(from_x.density.sup_norm())
        .max(1e-300);
    Ok((kxy - kyx).abs() / scale)
}

/// Conservation-defect measurement for one initial mass distribution.
#[derive(Debug, Clone)]
pub struct MassDefectReport {
    pub t: f64,
    pub initial_mass: f64,
    pub final_mass: f64,
    /// 1 - final/initial, clamped at -1e-10: zero for conservative flows,
    /// positive when mass leaks (boundary loss or non-conservativeness).
    pub defect: f64,
}

/// Measure the mass defect of the semigroup at time `t` starting from a
/// smooth bump supported in |x|_inf <= L/8 (so boundary effects stay
/// exponentially small for conservative flows).
pub fn mass_defect(
    op: &StiffnessOperator,
    t: f64,
    opts: &EvolveOptions,
) -> Result<MassDefectReport, SemigroupError> {
    let grid = op.grid();
    let r = grid.half_width() / 8.0;
    let v0 = GridFunction::from_fn(grid, |x| {
        x.iter()
            .map(|&xi| {
                let u: f64 = 1.0 - (xi / r) * (xi / r);
                u.max(0.0).powi(2)
            })
            .product()
    });
    mass_defect_from(op, &v0, t, opts)
}

/// Mass defect for a caller-supplied nonnegative initial distribution.
pub fn mass_defect_from(
    op: &StiffnessOperator,
    v0: &GridFunction,
    t: f64,
    opts: &EvolveOptions,
) -> Result<MassDefectReport, SemigroupError> {
    if v0.min_entry() < 0.0 {
        return Err(SemigroupError::Precondition(
            "mass defect requires a nonnegative initial distribution".to_string(),
        ));
    }
    let initial_mass = v0.integral();
    if initial_mass <= 0.0 {
        return Err(SemigroupError::Precondition(
            "initial distribution has zero mass".to_string(),
        ));
    }
    let report = evolve(op, v0, t, opts)?;
    let final_mass = report.result.integral();
    let defect = (1.0 - final_mass / initial_mass).max(-1e-10);
    Ok(MassDefectReport {
        t,
        initial_mass,
        final_mass,
        defect,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::CoefficientField;
    use crate::disc::{assemble_stiffness, Grid};
    use approx::assert_relative_eq;

    fn identity_op(d: usize, l: f64, n: usize) -> StiffnessOperator {
        let field = CoefficientField::identity(d);
        let grid = Grid::build(d, l, n).unwrap();
        assemble_stiffness(&field, &grid, 0.0).unwrap()
    }

    #[test]
    fn nearest_node_snaps_and_rejects_boundary() {
        let grid = Grid::build(1, 1.0, 5).unwrap();
        // h = 0.5; 0.2 snaps to node index 2 (x = 0).
        let node = nearest_interior_node(&grid, &[0.2]).unwrap();
        let mut x = [0.0];
        grid.node_coord(node, &mut x);
        assert_eq!(x[0], 0.0);
        assert!(nearest_interior_node(&grid, &[1.0]).is_err());
        assert!(nearest_interior_node(&grid, &[7.0]).is_err());
    }

    #[test]
    fn free_kernel_matches_gaussian() {
        // d=1, C=I: K_t(x,0) ~ (4 pi t)^{-1/2} exp(-x^2/(4t)) far from the box edge.
        let op = identity_op(1, 8.0, 641);
        let t = 0.5;
        let slice = heat_kernel_slice(&op, &[0.0], t, &EvolveOptions::default()).unwrap();
        assert!(slice.mass <= 1.0 + 1e-8);
        assert!(slice.mass > 0.99, "mass {}", slice.mass);
        for x in [0.0, 0.5, 1.0, 2.0] {
            let analytic = (4.0 * std::f64::consts::PI * t).powf(-0.5) * (-x * x / (4.0 * t)).exp();
            let k = slice.value_at(&[x]).unwrap();
            assert_relative_eq!(k, analytic, max_relative = 0.02);
        }
    }

    #[test]
    fn kernel_is_symmetric() {
        let field = CoefficientField::isotropic(1, "1.5+0.5*sin(x1)", "sin").unwrap();
        let grid = Grid::build(1, 6.0, 241).unwrap();
        let op = assemble_stiffness(&field, &grid, 0.0).unwrap();
        let defect = kernel_symmetry_defect(
            &op,
            &[-1.0],
            &[1.5],
            0.4,
            &EvolveOptions::default(),
        )
        .unwrap();
        assert!(defect <= 1e-6, "symmetry defect {defect}");
    }

    #[test]
    fn identity_flow_conserves_mass() {
        let op = identity_op(1, 10.0, 401);
        let r = mass_defect(&op, 0.5, &EvolveOptions::default()).unwrap();
        assert!(r.defect.abs() <= 1e-6, "defect {}", r.defect);
    }

    #[test]
    fn long_time_leaks_through_boundary() {
        // Small box, long time: heat reaches the Dirichlet boundary and mass
        // must visibly decrease.
        let op = identity_op(1, 2.0, 101);
        let r = mass_defect(&op, 4.0, &EvolveOptions::default()).unwrap();
        assert!(r.defect > 0.1, "defect {}", r.defect);
    }

    #[test]
    fn rejects_signed_initial_data() {
        let op = identity_op(1, 2.0, 41);
        let v0 = GridFunction::from_fn(op.grid(), |x| {
            if x[0].abs() >= 2.0 - 1e-12 {
                0.0
            } else {
                x[0]
            }
        });
        assert!(mass_defect_from(&op, &v0, 0.1, &EvolveOptions::default()).is_err());
    }
}
