//! The semigroup S_t = e^{-tH}: exponential action, heat-kernel slices,
//! conservation defects, Davies-Gaffney weighted estimates and the
//! epsilon-family comparison.
//!
//! Because the discrete H is a finite symmetric matrix, the paper's
//! distinction between the relaxation h_0 and the closure collapses here;
//! the epsilon-family experiment is the computational shadow of that
//! approximation argument that survives discretization.

pub mod cg;
pub mod davies_gaffney;
pub mod epsilon;
pub mod evolve;
pub mod io;
pub mod kernel;
pub mod lanczos;

pub use davies_gaffney::{davies_gaffney_check, DaviesGaffneyReport, LipschitzWeight};
pub use epsilon::{epsilon_family_compare, EpsilonFamilyReport, EpsilonRow};
pub use evolve::{evolve, EvolveOptions, EvolveReport, SemigroupError, SolverPath};
pub use io::{
    evolve_report_csv, evolve_report_json, grid_csv, grid_meta, kernel_slice_csv,
    kernel_slice_json,
};
pub use kernel::{
    heat_kernel_slice, kernel_symmetry_defect, mass_defect, mass_defect_from, KernelSlice,
    MassDefectReport,
};
