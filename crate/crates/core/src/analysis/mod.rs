//! The inverse direction: fit Gaussian envelopes to computed kernels,
//! recover the ellipticity constants through the moment formulas and the
//! oscillating-test-function limit, and provide the independent 1-d Feller
//! conservativeness oracle.

pub mod envelope;
pub mod feller;
pub mod oscillation;
pub mod profiles;

use thiserror::Error;

pub use envelope::{fit_gaussian_envelope, EnvelopeWindow, GaussianEnvelope};
pub use feller::{feller_oracle_1d, FellerReport, FellerVerdict};
pub use oscillation::{oscillation_extract, OscillationRow, OscillationTable};
pub use profiles::{
    envelope_to_profiles, moment_report, recover_lambda, recover_mu, MomentReport, ProfilePair,
    RadialProfile, TailFit,
};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("ellipticity constants out of range: mu={mu}, lambda={lambda} (need 0 < mu <= lambda < inf)")]
    BadConstants { mu: f64, lambda: f64 },
    #[error("fitting window is empty: {0}")]
    EmptyWindow(String),
    #[error("no lower bound: the kernel vanishes inside the fitting window (degenerate signal)")]
    NoLowerBound,
    #[error("need at least 2 distinct time values, got {0}")]
    TooFewTimes(usize),
    #[error("envelope coverage violated: point (u={u:.6}, w={w:.6}) misses the {side} bound by {gap:.3e}")]
    CoverageViolation { u: f64, w: f64, side: &'static str, gap: f64 },
    #[error("profile moment diverges: {0}")]
    DivergentMoment(String),
    #[error("zero profile: the moment integral vanishes")]
    ZeroProfile,
    #[error("resolution guard: k={k} exceeds pi/(4h) = {limit}")]
    ResolutionGuard { k: f64, limit: f64 },
    #[error("{0}")]
    Precondition(String),
    #[error(transparent)]
    Disc(#[from] crate::disc::DiscError),
    #[error(transparent)]
    Field(#[from] crate::coeff::FieldError),
    #[error("coefficient evaluation at x={x}: {source}")]
    Eval {
        x: f64,
        source: crate::coeff::EvalError,
    },
}

/// Where an ellipticity estimate came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Scan,
    RecoveredFromKernel,
    Oscillation,
}

/// The pair (mu, lambda) of Eq-style ellipticity constants
/// lambda I >= C(x) >= mu I together with its provenance.
#[derive(Debug, Clone, Copy)]
pub struct EllipticityEstimate {
    pub mu: f64,
    pub lambda: f64,
    pub provenance: Provenance,
}

impl EllipticityEstimate {
    /// Checked constructor enforcing 0 < mu <= lambda < inf.
    pub fn new(mu: f64, lambda: f64, provenance: Provenance) -> Result<Self, AnalysisError> {
        if !(mu > 0.0 && mu <= lambda && lambda.is_finite()) {
            return Err(AnalysisError::BadConstants { mu, lambda });
        }
        Ok(EllipticityEstimate {
            mu,
            lambda,
            provenance,
        })
    }

    /// Estimate from a pointwise eigenvalue scan. Degenerate fields may
    /// legitimately report mu = 0 here, so no positivity is enforced; use
    /// [`EllipticityEstimate::new`] when the strict invariant is required.
    pub fn scanned(mu: f64, lambda: f64) -> Self {
        EllipticityEstimate {
            mu,
            lambda,
            provenance: Provenance::Scan,
        }
    }

    /// True when the strict invariant 0 < mu <= lambda < inf holds.
    pub fn is_strictly_elliptic(&self) -> bool {
        self.mu > 0.0 && self.mu <= self.lambda && self.lambda.is_finite()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constructor_enforces_invariant() {
        assert!(EllipticityEstimate::new(1.0, 2.0, Provenance::Scan).is_ok());
        assert!(EllipticityEstimate::new(0.0, 2.0, Provenance::Scan).is_err());
        assert!(EllipticityEstimate::new(3.0, 2.0, Provenance::Scan).is_err());
        assert!(EllipticityEstimate::new(1.0, f64::INFINITY, Provenance::Scan).is_err());
    }

    #[test]
    fn scanned_allows_degenerate() {
        let e = EllipticityEstimate::scanned(0.0, 4.0);
        assert!(!e.is_strictly_elliptic());
        assert_eq!(e.provenance, Provenance::Scan);
    }
}
