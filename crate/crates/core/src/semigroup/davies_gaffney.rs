//! Davies-Gaffney weighted estimates: pointwise-in-time bound
//! ||U_tau S_t phi||_2 <= e^{tau^2 t} ||U_tau phi||_2 for Lipschitz weights
//! U_tau = e^{tau psi} with Gamma(psi) <= 1, plus the integrated bound
//! int_0^t ds int U_{2tau} Gamma_eps(S_s phi) <= 2 e^{2 tau^2 t} ||U_tau phi||_2^2.

use super::evolve::{evolve, EvolveOptions, SemigroupError};
use crate::coeff::CoefficientField;
use crate::disc::{carre_du_champ, Grid, GridFunction, StiffnessOperator};

/// Certificate tolerance on the Gamma bound.
const GAMMA_TOL: f64 = 1e-10;

/// A weight function psi together with its certified carre-du-champ bound.
#[derive(Debug, Clone)]
pub struct LipschitzWeight {
    psi: GridFunction,
    gamma_bound: f64,
}

impl LipschitzWeight {
    /// Certify `psi` against the field: Gamma_eps(psi) must not exceed 1
    /// (up to roundoff) anywhere.
    pub fn certify(
        field: &CoefficientField,
        psi: GridFunction,
        epsilon: f64,
    ) -> Result<Self, SemigroupError> {
        let gamma = carre_du_champ(field, &psi, epsilon).map_err(SemigroupError::Disc)?;
        let gamma_bound = gamma.max().max(0.0);
        if gamma_bound > 1.0 + GAMMA_TOL {
            return Err(SemigroupError::CertificateViolation(gamma_bound));
        }
        Ok(LipschitzWeight { psi, gamma_bound })
    }

    /// Build a certified weight from the clipped distance min(|x|, cap),
    /// rescaled so that the Gamma certificate holds for this field.
    pub fn clipped_distance(
        field: &CoefficientField,
        grid: &Grid,
        cap: f64,
        epsilon: f64,
    ) -> Result<Self, SemigroupError> {
        let raw = GridFunction::from_fn(grid, |x| {
            x.iter().map(|v| v * v).sum::<f64>().sqrt().min(cap)
        });
        let gamma = carre_du_champ(field, &raw, epsilon).map_err(SemigroupError::Disc)?;
        let max_gamma = gamma.max().max(0.0);
        // Gamma is quadratic in psi, so dividing psi by sqrt(max Gamma)
        // brings the certificate to exactly 1.
        let scale = if max_gamma > 1.0 {
            1.0 / max_gamma.sqrt()
        } else {
            1.0
        };
        let psi = GridFunction::new(
            grid.clone(),
            raw.values().iter().map(|v| v * scale).collect(),
        );
        LipschitzWeight::certify(field, psi, epsilon)
    }

    pub fn psi(&self) -> &GridFunction {
        &self.psi
    }

    pub fn gamma_bound(&self) -> f64 {
        self.gamma_bound
    }

    /// Weighted L2 norm ||e^{tau psi} f||_2.
    fn weighted_norm(&self, tau: f64, f: &GridFunction) -> f64 {
        let w = f.grid().cell_volume();
        let s: f64 = self
            .psi
            .values()
            .iter()
            .zip(f.values())
            .map(|(&p, &v)| {
                let u = (tau * p).exp() * v;
                u * u
            })
            .sum();
        (s * w).sqrt()
    }

    /// Average of e^{2 tau psi} over the corners of each cell (the weight
    /// U_{2tau} used in the integrated estimate lives on cells, where the
    /// carre du champ is defined).
    fn cell_weight(&self, tau: f64, grid: &Grid) -> Vec<f64> {
        let d = grid.dimension();
        let corners = 1usize << d;
        let vals = self.psi.values();
        let mut out = vec![0.0; grid.cell_count()];
        for (cell, o) in out.iter_mut().enumerate() {
            let base = grid.cell_corner(cell);
            let mut acc = 0.0;
            for mask in 0..corners {
                let mut node = base;
                for axis in 0..d {
                    if mask & (1 << axis) != 0 {
                        node += grid.stride(axis);
                    }
                }
                acc += (2.0 * tau * vals[node]).exp();
            }
            *o = acc / corners as f64;
        }
        out
    }
}

/// Outcome of one Davies-Gaffney verification.
#[derive(Debug, Clone)]
pub struct DaviesGaffneyReport {
    pub tau: f64,
    pub t: f64,
    /// ||U_tau S_t phi||_2.
    pub lhs: f64,
    /// e^{tau^2 t} ||U_tau phi||_2.
    pub rhs: f64,
    /// rhs - lhs; nonnegative up to discretization error when the estimate holds.
    pub slack: f64,
    /// Time-quadrature value of int_0^t ds int U_{2tau} Gamma_eps(S_s phi).
    pub integrated_value: f64,
    /// 2 e^{2 tau^2 t} ||U_tau phi||_2^2.
    pub integrated_bound: f64,
    pub integrated_slack: f64,
    /// |fine - coarse| trapezoid difference, an error estimate for the
    /// time quadrature.
    pub quadrature_error: f64,
}

/// Number of trapezoid panels for the time quadrature (doubled once for the
/// error estimate).
const TIME_PANELS: usize = 32;

/// Verify both Davies-Gaffney estimates for one (tau, t) pair.
///
/// `field` and `op` must describe the same operator (same regularization
/// epsilon) so that the carre du champ matches the energy form.
pub fn davies_gaffney_check(
    op: &StiffnessOperator,
    field: &CoefficientField,
    weight: &LipschitzWeight,
    phi: &GridFunction,
    tau: f64,
    t: f64,
    opts: &EvolveOptions,
) -> Result<DaviesGaffneyReport, SemigroupError> {
    if !(t > 0.0) {
        return Err(SemigroupError::Precondition(format!(
            "need t > 0, got {t}"
        )));
    }
    if weight.gamma_bound() > 1.0 + GAMMA_TOL {
        return Err(SemigroupError::CertificateViolation(weight.gamma_bound()));
    }

    let weighted0 = weight.weighted_norm(tau, phi);
    let evolved = evolve(op, phi, t, opts)?;
    let lhs = weight.weighted_norm(tau, &evolved.result);
    let rhs = (tau * tau * t).exp() * weighted0;

    // Integrated estimate: evolve incrementally on the fine time lattice and
    // integrate the weighted energy density with the trapezoid rule at both
    // the fine (2*TIME_PANELS) and coarse (TIME_PANELS) resolutions.
    let fine_panels = 2 * TIME_PANELS;
    let dt = t / fine_panels as f64;
    let grid = op.grid();
    let vol = grid.cell_volume();
    let cell_w = weight.cell_weight(tau, grid);
    let epsilon = op.epsilon();

    let weighted_energy = |u: &GridFunction| -> Result<f64, SemigroupError> {
        let gamma = carre_du_champ(field, u, epsilon).map_err(SemigroupError::Disc)?;
        Ok(gamma
            .values()
            .iter()
            .zip(&cell_w)
            .map(|(&g, &w)| g * w)
            .sum::<f64>()
            * vol)
    };

    let mut samples = Vec::with_capacity(fine_panels + 1);
    let mut state = phi.clone();
    samples.push(weighted_energy(&state)?);
    for _ in 0..fine_panels {
        state = evolve(op, &state, dt, opts)?.result;
        samples.push(weighted_energy(&state)?);
    }

    let trapezoid = |stride: usize| -> f64 {
        let h = dt * stride as f64;
        let pts: Vec<f64> = samples.iter().step_by(stride).cloned().collect();
        let mut acc = 0.5 * (pts[0] + pts[pts.len() - 1]);
        acc += pts[1..pts.len() - 1].iter().sum::<f64>();
        acc * h
    };
    let fine = trapezoid(1);
    let coarse = trapezoid(2);

    let integrated_bound = 2.0 * (2.0 * tau * tau * t).exp() * weighted0 * weighted0;

    Ok(DaviesGaffneyReport {
        tau,
        t,
        lhs,
        rhs,
        slack: rhs - lhs,
        integrated_value: fine,
        integrated_bound,
        integrated_slack: integrated_bound - fine,
        quadrature_error: (fine - coarse).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disc::assemble_stiffness;
    use approx::assert_relative_eq;

    fn setup(expr: &str, l: f64, n: usize) -> (CoefficientField, StiffnessOperator) {
        let field = CoefficientField::isotropic(1, expr, "test").unwrap();
        let grid = Grid::build(1, l, n).unwrap();
        let op = assemble_stiffness(&field, &grid, 0.0).unwrap();
        (field, op)
    }

    fn bump(grid: &Grid) -> GridFunction {
        GridFunction::from_fn(grid, |x| {
            let u: f64 = 1.0 - x[0] * x[0];
            u.max(0.0).powi(2)
        })
    }

    #[test]
    fn certificate_rejects_steep_weights() {
        let field = CoefficientField::identity(1);
        let grid = Grid::build(1, 2.0, 41).unwrap();
        let steep = GridFunction::from_fn(&grid, |x| 3.0 * x[0]);
        assert!(matches!(
            LipschitzWeight::certify(&field, steep, 0.0),
            Err(SemigroupError::CertificateViolation(_))
        ));
    }

    #[test]
    fn clipped_distance_certifies_for_identity() {
        let field = CoefficientField::identity(1);
        let grid = Grid::build(1, 4.0, 161).unwrap();
        let w = LipschitzWeight::clipped_distance(&field, &grid, 2.0, 0.0).unwrap();
        assert!(w.gamma_bound() <= 1.0 + 1e-10);
        // |x| has slope 1 where C = I, so the bound is attained.
        assert!(w.gamma_bound() > 0.99);
    }

    #[test]
    fn clipped_distance_rescales_for_large_coefficients() {
        let field = CoefficientField::isotropic(1, "4", "four").unwrap();
        let grid = Grid::build(1, 4.0, 161).unwrap();
        let w = LipschitzWeight::clipped_distance(&field, &grid, 2.0, 0.0).unwrap();
        assert!(w.gamma_bound() <= 1.0 + 1e-10);
        // Gamma(|x|) = 4, so psi is halved.
        assert_relative_eq!(w.psi().sup_norm(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn tau_zero_reduces_to_contraction() {
        let (field, op) = setup("1", 4.0, 161);
        let w = LipschitzWeight::clipped_distance(&field, op.grid(), 2.0, 0.0).unwrap();
        let phi = bump(op.grid());
        let r =
            davies_gaffney_check(&op, &field, &w, &phi, 0.0, 0.25, &EvolveOptions::default())
                .unwrap();
        assert!(r.slack >= 0.0, "slack {}", r.slack);
        assert!(r.integrated_slack >= 0.0);
    }

    #[test]
    fn estimate_holds_for_identity_field() {
        let (field, op) = setup("1", 5.0, 201);
        let w = LipschitzWeight::clipped_distance(&field, op.grid(), 2.5, 0.0).unwrap();
        let phi = bump(op.grid());
        for tau in [0.5, 1.0, 2.0] {
            let r = davies_gaffney_check(
                &op,
                &field,
                &w,
                &phi,
                tau,
                0.25,
                &EvolveOptions::default(),
            )
            .unwrap();
            assert!(
                r.slack >= -1e-6 * r.rhs,
                "tau {tau}: slack {} rhs {}",
                r.slack,
                r.rhs
            );
            assert!(
                r.integrated_slack >= -1e-6 * r.integrated_bound,
                "tau {tau}: integrated slack {}",
                r.integrated_slack
            );
        }
    }

    #[test]
    fn doubling_tau_squares_the_growth_factor() {
        let (field, op) = setup("1", 4.0, 101);
        let w = LipschitzWeight::clipped_distance(&field, op.grid(), 2.0, 0.0).unwrap();
        let phi = bump(op.grid());
        let t = 0.1;
        let opts = EvolveOptions::default();
        let r1 = davies_gaffney_check(&op, &field, &w, &phi, 1.0, t, &opts).unwrap();
        let r2 = davies_gaffney_check(&op, &field, &w, &phi, 2.0, t, &opts).unwrap();
        // rhs factor goes from e^{tau^2 t} to e^{4 tau^2 t} exactly.
        let f1 = r1.rhs / w.weighted_norm(1.0, &phi);
        let f2 = r2.rhs / w.weighted_norm(2.0, &phi);
        assert_relative_eq!(f1, (t).exp(), max_relative = 1e-12);
        assert_relative_eq!(f2, (4.0 * t).exp(), max_relative = 1e-12);
    }

    #[test]
    fn quadrature_error_is_small() {
        let (field, op) = setup("1.5+0.5*sin(x1)", 4.0, 161);
        let w = LipschitzWeight::clipped_distance(&field, op.grid(), 2.0, 0.0).unwrap();
        let phi = bump(op.grid());
        let r =
            davies_gaffney_check(&op, &field, &w, &phi, 0.5, 0.2, &EvolveOptions::default())
                .unwrap();
        assert!(r.quadrature_error <= 0.01 * r.integrated_value.max(1e-12));
    }
}
