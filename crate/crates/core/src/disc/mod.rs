//! Discretization: box grids, the factored stiffness assembly, discrete
//! quadratic forms, carre du champ densities and cutoff functions.

pub mod grid;
pub mod operator;
pub mod sparse;

pub use grid::{CellFunction, Grid, GridError, GridFunction, MAX_NODES};
pub use operator::{
    assemble_stiffness, carre_du_champ, cutoff_eta, quadratic_form, sample_function, DiscError,
    StiffnessOperator, BOUNDARY_TOL,
};
pub use sparse::CsrMatrix;
