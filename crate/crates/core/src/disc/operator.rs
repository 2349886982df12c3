//! Assembly of the divergence-form stiffness operator and the discrete
//! quadratic form machinery.
//!
//! The operator is built in factored form: a forward-difference gradient per
//! cell, a block-diagonal coefficient matrix C(midpoint) + eps I weighted by
//! the cell volume, and the transpose gradient. Restricting rows and columns
//! to interior nodes realizes the Dirichlet condition. Symmetry is exact and
//! positive semidefiniteness is inherited from the pointwise PSD coefficient
//! blocks.

use thiserror::Error;

use super::grid::{CellFunction, Grid, GridFunction};
use super::sparse::CsrMatrix;
use crate::coeff::growth::{GrowthError, GrowthProfile};
use crate::coeff::{CoefficientField, FieldError};

/// Boundary values above this (relative to the sup norm) are rejected for
/// Dirichlet-form arguments.
pub const BOUNDARY_TOL: f64 = 1e-14;

#[derive(Debug, Error)]
pub enum DiscError {
    #[error("field dimension {field} does not match grid dimension {grid}")]
    DimensionMismatch { field: usize, grid: usize },
    #[error("epsilon must be >= 0, got {0}")]
    NegativeEpsilon(f64),
    #[error("coefficient matrix not PSD at cell midpoint {point:?}: min eigenvalue {min_eig:.3e}")]
    CellNotPsd { point: Vec<f64>, min_eig: f64 },
    #[error("field evaluation at node {point:?}: {source}")]
    NodeEval {
        point: Vec<f64>,
        source: crate::coeff::EvalError,
    },
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("function has nonzero boundary values (sup {0:.3e}); not Dirichlet admissible")]
    BoundaryViolation(f64),
    #[error("function lives on a different grid")]
    GridMismatch,
    #[error(transparent)]
    Growth(#[from] GrowthError),
}

/// Sparse symmetric PSD realization of the quadratic form
/// sum_ij (d_i phi, c_ij d_j phi) on interior nodes.
#[derive(Debug, Clone)]
pub struct StiffnessOperator {
    grid: Grid,
    field_label: String,
    epsilon: f64,
    /// Form matrix A: phi' A phi is the exact cell quadrature of the energy.
    /// The generator of the semigroup is A / h^d.
    form_matrix: CsrMatrix,
    /// Flat node indices of the interior nodes, ascending.
    interior: Vec<usize>,
    /// node flat index -> interior index (usize::MAX for boundary).
    node_to_interior: Vec<usize>,
}

impl StiffnessOperator {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn field_label(&self) -> &str {
        &self.field_label
    }

    pub fn form_matrix(&self) -> &CsrMatrix {
        &self.form_matrix
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn interior_dim(&self) -> usize {
        self.interior.len()
    }

    /// Interior index of a flat node index (None for boundary nodes).
    pub fn interior_index(&self, node: usize) -> Option<usize> {
        match self.node_to_interior[node] {
            usize::MAX => None,
            k => Some(k),
        }
    }

    /// Restrict a grid function to the interior node vector.
    pub fn restrict(&self, f: &GridFunction) -> Result<Vec<f64>, DiscError> {
        if f.grid() != &self.grid {
            return Err(DiscError::GridMismatch);
        }
        Ok(self.interior.iter().map(|&i| f.values()[i]).collect())
    }

    /// Embed an interior vector back into a grid function (zero boundary).
    pub fn embed(&self, v: &[f64]) -> GridFunction {
        let mut out = GridFunction::zeros(&self.grid);
        for (&node, &val) in self.interior.iter().zip(v) {
            out.values_mut()[node] = val;
        }
        out
    }

    /// Generator action y = (A / h^d) x on interior vectors.
    pub fn apply_generator(&self, x: &[f64], y: &mut [f64]) {
        self.form_matrix.mul_into(x, y);
        let inv_vol = 1.0 / self.grid.cell_volume();
        for v in y.iter_mut() {
            *v *= inv_vol;
        }
    }

    /// Upper bound on the generator spectrum (Gershgorin).
    pub fn generator_norm_bound(&self) -> f64 {
        self.form_matrix.gershgorin_max() / self.grid.cell_volume()
    }
}

/// Assemble the stiffness operator for `field` with regularization
/// C + epsilon I sampled at cell midpoints.
pub fn assemble_stiffness(
    field: &CoefficientField,
    grid: &Grid,
    epsilon: f64,
) -> Result<StiffnessOperator, DiscError> {
    let d = grid.dimension();
    if field.dimension() != d {
        return Err(DiscError::DimensionMismatch {
            field: field.dimension(),
            grid: d,
        });
    }
    if !(epsilon >= 0.0) {
        return Err(DiscError::NegativeEpsilon(epsilon));
    }

    let interior = grid.interior_nodes();
    let mut node_to_interior = vec![usize::MAX; grid.node_count()];
    for (k, &node) in interior.iter().enumerate() {
        node_to_interior[node] = k;
    }

    let h = grid.spacing();
    let vol = grid.cell_volume();
    let inv_h = 1.0 / h;
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); interior.len()];

    let mut mid = vec![0.0; d];
    // Local node set per cell: lower corner plus its d forward neighbours.
    let mut local_nodes = vec![0usize; d + 1];
    // b_p = p-th column of the gradient matrix B (d x (d+1)).
    let mut local = vec![vec![0.0; d + 1]; d + 1];

    for cell in 0..grid.cell_count() {
        grid.cell_midpoint(cell, &mut mid);
        let mut c = field.eval_matrix(&mid)?;
        for i in 0..d {
            c[(i, i)] += epsilon;
        }
        // PSD check at the midpoint (cheap for d <= 3).
        let min_eig = if d == 1 {
            c[(0, 0)]
        } else {
            c.symmetric_eigenvalues()
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min)
        };
        let scale = c.amax().max(1.0);
        if min_eig < -1e-12 * scale {
            return Err(DiscError::CellNotPsd {
                point: mid.clone(),
                min_eig,
            });
        }

        let corner = grid.cell_corner(cell);
        local_nodes[0] = corner;
        for i in 0..d {
            local_nodes[i + 1] = corner + grid.stride(i);
        }

        // local[p][q] = vol * b_p' C b_q with b_0 = -(1/h) * ones, b_i = e_i / h.
        // Upper triangle is computed once and mirrored so symmetry is exact.
        let row_sums: Vec<f64> = (0..d).map(|i| (0..d).map(|j| c[(i, j)]).sum()).collect();
        let total: f64 = row_sums.iter().sum();
        let w = vol * inv_h * inv_h;
        local[0][0] = w * total;
        for q in 1..=d {
            let v = -w * row_sums[q - 1];
            local[0][q] = v;
            local[q][0] = v;
        }
        for p in 1..=d {
            for q in p..=d {
                let v = w * c[(p - 1, q - 1)];
                local[p][q] = v;
                local[q][p] = v;
            }
        }

        for p in 0..=d {
            let gp = node_to_interior[local_nodes[p]];
            if gp == usize::MAX {
                continue;
            }
            for q in 0..=d {
                let gq = node_to_interior[local_nodes[q]];
                if gq == usize::MAX {
                    continue;
                }
                rows[gp].push((gq, local[p][q]));
            }
        }
    }

    let form_matrix = CsrMatrix::from_rows(interior.len(), rows);
    Ok(StiffnessOperator {
        grid: grid.clone(),
        field_label: field.label().to_string(),
        epsilon,
        form_matrix,
        interior,
        node_to_interior,
    })
}

/// The discrete energy h(phi) = phi' A phi.
///
/// `phi` must vanish on the boundary (Dirichlet membership); the value equals
/// the cell quadrature of grad phi . C grad phi by the factored construction.
pub fn quadratic_form(op: &StiffnessOperator, phi: &GridFunction) -> Result<f64, DiscError> {
    if phi.grid() != op.grid() {
        return Err(DiscError::GridMismatch);
    }
    let bsup = phi.boundary_sup();
    if bsup > BOUNDARY_TOL * phi.sup_norm().max(1.0) {
        return Err(DiscError::BoundaryViolation(bsup));
    }
    let v = op.restrict(phi)?;
    Ok(op.form_matrix.quadratic(&v))
}

/// Pointwise energy density per cell: grad phi . C grad phi + eps |grad phi|^2
/// at the cell midpoint.
pub fn carre_du_champ(
    field: &CoefficientField,
    phi: &GridFunction,
    epsilon: f64,
) -> Result<CellFunction, DiscError> {
    let grid = phi.grid().clone();
    let d = grid.dimension();
    if field.dimension() != d {
        return Err(DiscError::DimensionMismatch {
            field: field.dimension(),
            grid: d,
        });
    }
    let h = grid.spacing();
    let mut mid = vec![0.0; d];
    let mut g = vec![0.0; d];
    let vals = phi.values();
    let mut out = vec![0.0; grid.cell_count()];
    for (cell, o) in out.iter_mut().enumerate() {
        let corner = grid.cell_corner(cell);
        for i in 0..d {
            g[i] = (vals[corner + grid.stride(i)] - vals[corner]) / h;
        }
        grid.cell_midpoint(cell, &mut mid);
        let c = field.eval_matrix(&mid)?;
        let mut acc = 0.0;
        for i in 0..d {
            for j in 0..d {
                acc += g[i] * c[(i, j)] * g[j];
            }
            acc += epsilon * g[i] * g[i];
        }
        *o = acc;
    }
    Ok(CellFunction::new(grid, out))
}

/// Cutoff function eta_R(x) = eta(rho(|x|)/R): identically 1 on the
/// rho-ball of radius R, vanishing outside radius 2R, with the C^1 cubic
/// smoothstep in between (slope bounded by 3/2 <= 2).
pub fn cutoff_eta(
    grid: &Grid,
    profile: &GrowthProfile,
    big_r: f64,
) -> Result<GridFunction, DiscError> {
    assert!(big_r > 0.0, "R must be positive");
    if profile.max_radius() < grid.box_diagonal() {
        return Err(DiscError::Growth(GrowthError::Precondition(format!(
            "rho table reaches {} but the box diagonal is {}",
            profile.max_radius(),
            grid.box_diagonal()
        ))));
    }
    let mut out = GridFunction::zeros(grid);
    let mut x = vec![0.0; grid.dimension()];
    for i in 0..grid.node_count() {
        grid.node_coord(i, &mut x);
        let s = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let u = profile.rho_at(s)? / big_r;
        out.values_mut()[i] = if u < 1.0 {
            1.0
        } else if u >= 2.0 {
            0.0
        } else {
            let w = u - 1.0;
            1.0 - w * w * (3.0 - 2.0 * w)
        };
    }
    Ok(out)
}

/// Sample a scalar expression at the grid nodes.
pub fn sample_function(
    grid: &Grid,
    expr: &crate::coeff::ScalarFieldExpr,
) -> Result<GridFunction, DiscError> {
    let mut out = GridFunction::zeros(grid);
    let mut x = vec![0.0; grid.dimension()];
    for i in 0..grid.node_count() {
        grid.node_coord(i, &mut x);
        out.values_mut()[i] = expr.eval(&x).map_err(|source| DiscError::NodeEval {
            point: x.clone(),
            source,
        })?;
    }
    Ok(out)
}
