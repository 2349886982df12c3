//! Numerical laboratory for divergence-form diffusion operators
//! H = -sum_ij d_i c_ij d_j on box grids.
//!
//! The crate builds the operator from symbolic coefficient fields, runs its
//! semigroup e^{-tH}, extracts heat-kernel slices, fits Gaussian envelopes to
//! them, recovers ellipticity constants from the fitted envelopes via moment
//! formulas, and classifies coefficient growth against measured conservation
//! defects.

pub mod analysis;
pub mod cli;
pub mod coeff;
pub mod disc;
pub mod numerics;
pub mod semigroup;
