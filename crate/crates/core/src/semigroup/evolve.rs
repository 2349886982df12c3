//! Semigroup action: result ~ exp(-tH) v0 with a restarted Krylov
//! exponential integrator and a trapezoidal implicit fallback.

use thiserror::Error;

use super::cg::solve_cg;
use super::lanczos::{dist, expv_lanczos, norm};
use crate::disc::{DiscError, GridFunction, StiffnessOperator, BOUNDARY_TOL};

/// Solver knobs. The defaults implement the documented strategy: Krylov
/// dimension 30 doubling to 200, restarts on stagnation, then trapezoidal
/// stepping with substeps doubling from 64 to 4096.
#[derive(Debug, Clone)]
pub struct EvolveOptions {
    pub rel_tol: f64,
    pub krylov_dim_start: usize,
    pub krylov_dim_cap: usize,
    /// Cap on the number of Krylov restart substeps.
    pub krylov_substep_cap: usize,
    pub cn_substep_start: usize,
    pub cn_substep_cap: usize,
    /// Negative excursions beyond `pos_tol_factor * ||v0||_inf` for
    /// nonnegative data are treated as solver failures.
    pub pos_tol_factor: f64,
    /// CG tolerance for the implicit solves.
    pub cg_rel_tol: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            rel_tol: 1e-8,
            krylov_dim_start: 30,
            krylov_dim_cap: 200,
            krylov_substep_cap: 1 << 17,
            cn_substep_start: 64,
            cn_substep_cap: 4096,
            pos_tol_factor: 1e-8,
            cg_rel_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverPath {
    Identity,
    Krylov,
    Trapezoidal,
}

/// Result of one semigroup solve together with its diagnostics.
#[derive(Debug, Clone)]
pub struct EvolveReport {
    pub result: GridFunction,
    pub t: f64,
    pub path: SolverPath,
    /// Substeps used (Krylov restarts or trapezoidal steps).
    pub substeps: usize,
    /// Largest Krylov dimension used in any substep.
    pub krylov_dim: usize,
    pub max_negative_excursion: f64,
    pub sup_norm: f64,
    pub residual_estimate: f64,
}

#[derive(Debug, Error)]
pub enum SemigroupError {
    #[error(transparent)]
    Disc(#[from] DiscError),
    #[error("negative time {0}")]
    NegativeTime(f64),
    #[error(
        "no convergence at t={t}: Krylov residual {krylov_residual:.3e} after {krylov_substeps} \
         substeps, trapezoidal difference {cn_difference:.3e} at {cn_substeps} substeps \
         (target {target:.3e})"
    )]
    NonConvergence {
        t: f64,
        krylov_residual: f64,
        krylov_substeps: usize,
        cn_difference: f64,
        cn_substeps: usize,
        target: f64,
    },
    #[error(
        "positivity violated: negative excursion {excursion:.3e} below -{tol:.3e} for nonnegative data"
    )]
    PositivityViolation { excursion: f64, tol: f64 },
    #[error("L2 contraction violated: ||result|| = {after:.3e} > ||v0|| = {before:.3e}")]
    ContractionViolation { before: f64, after: f64 },
    #[error("Lipschitz certificate violated: max Gamma(psi) = {0:.6e} exceeds 1")]
    CertificateViolation(f64),
    #[error("{0}")]
    Precondition(String),
}

/// Advance the interior vector by exp(-tH) with Krylov restarts. Returns
/// (substeps, max dim, residual) on success.
fn krylov_advance(
    op: &StiffnessOperator,
    v: &mut Vec<f64>,
    t: f64,
    opts: &EvolveOptions,
) -> Result<(usize, usize, f64), (f64, usize)> {
    // Substep heuristic: keep t_step * lambda_max small enough that the
    // capped subspace converges; the Gershgorin bound is cheap and safe.
    let lam = op.generator_norm_bound();
    let mut substeps: usize = 1;
    let target = t * lam / 4000.0;
    while (substeps as f64) < target && substeps < opts.krylov_substep_cap {
        substeps *= 2;
    }

    let v0 = v.clone();
    loop {
        let dt = t / substeps as f64;
        let step_tol = (opts.rel_tol / substeps as f64).max(1e-13);
        let mut ok = true;
        let mut max_dim = 0;
        let mut worst_residual: f64 = 0.0;
        v.copy_from_slice(&v0);
        for _ in 0..substeps {
            let mut apply = |x: &[f64], y: &mut [f64]| op.apply_generator(x, y);
            let r = expv_lanczos(
                &mut apply,
                v,
                dt,
                step_tol,
                opts.krylov_dim_start,
                opts.krylov_dim_cap,
            );
            max_dim = max_dim.max(r.dim_used);
            worst_residual = worst_residual.max(r.residual);
            if !r.converged {
                ok = false;
                break;
            }
            *v = r.vector;
        }
        if ok {
            return Ok((substeps, max_dim, worst_residual));
        }
        if substeps >= opts.krylov_substep_cap {
            v.copy_from_slice(&v0);
            return Err((worst_residual, substeps));
        }
        substeps = (substeps * 4).min(opts.krylov_substep_cap);
    }
}

/// One full trapezoidal (Crank-Nicolson) integration with a fixed number of
/// steps. Returns None if an inner CG solve fails.
fn trapezoid_integrate(
    op: &StiffnessOperator,
    v0: &[f64],
    t: f64,
    steps: usize,
    cg_rel_tol: f64,
) -> Option<Vec<f64>> {
    let n = v0.len();
    let dt = t / steps as f64;
    let vol = op.grid().cell_volume();
    let half = 0.5 * dt / vol;

    // (I + dt/2 H) x = (I - dt/2 H) v, with H = A/vol.
    let a = op.form_matrix();
    let mut diag = a.diagonal();
    for d in diag.iter_mut() {
        *d = 1.0 + half * *d;
    }
    let mut v = v0.to_vec();
    let mut rhs = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    for _ in 0..steps {
        a.mul_into(&v, &mut scratch);
        for i in 0..n {
            rhs[i] = v[i] - half * scratch[i];
        }
        let mut apply = |x: &[f64], y: &mut [f64]| {
            a.mul_into(x, y);
            for i in 0..n {
                y[i] = x[i] + half * y[i];
            }
        };
        // Warm start from the previous state.
        let out = solve_cg(&mut apply, &diag, &rhs, &mut v, cg_rel_tol, 20 * n + 200);
        if !out.converged {
            return None;
        }
    }
    Some(v)
}

/// Compute exp(-tH) v0.
///
/// `v0` must vanish on the boundary. For nonnegative input the result is
/// checked against the positivity and L2-contraction invariants of the
/// submarkovian semigroup; violations beyond tolerance are reported as
/// solver failures rather than silently clipped.
pub fn evolve(
    op: &StiffnessOperator,
    v0: &GridFunction,
    t: f64,
    opts: &EvolveOptions,
) -> Result<EvolveReport, SemigroupError> {
    if t < 0.0 {
        return Err(SemigroupError::NegativeTime(t));
    }
    let bsup = v0.boundary_sup();
    if bsup > BOUNDARY_TOL * v0.sup_norm().max(1.0) {
        return Err(SemigroupError::Disc(DiscError::BoundaryViolation(bsup)));
    }
    if t == 0.0 {
        return Ok(EvolveReport {
            result: v0.clone(),
            t,
            path: SolverPath::Identity,
            substeps: 0,
            krylov_dim: 0,
            max_negative_excursion: v0.min_entry().min(0.0),
            sup_norm: v0.sup_norm(),
            residual_estimate: 0.0,
        });
    }

    let mut v = op.restrict(v0)?;
    let before = norm(&v);

    let (path, substeps, krylov_dim, residual) = match krylov_advance(op, &mut v, t, opts) {
        Ok((s, d, r)) => (SolverPath::Krylov, s, d, r),
        Err((krylov_residual, krylov_substeps)) => {
            // Trapezoidal fallback with substep doubling.
            let mut steps = opts.cn_substep_start;
            let mut prev = trapezoid_integrate(op, &v, t, steps, opts.cg_rel_tol);
            let mut accepted = None;
            let mut diff = f64::INFINITY;
            while let Some(p) = prev.take() {
                if steps * 2 > opts.cn_substep_cap {
                    break;
                }
                steps *= 2;
                match trapezoid_integrate(op, &v, t, steps, opts.cg_rel_tol) {
                    Some(cur) => {
                        diff = dist(&cur, &p) / before.max(1e-300);
                        if diff <= opts.rel_tol {
                            accepted = Some((cur, steps, diff));
                            break;
                        }
                        prev = Some(cur);
                    }
                    None => break,
                }
            }
            match accepted {
                Some((cur, steps, diff)) => {
                    v = cur;
                    (SolverPath::Trapezoidal, steps, 0, diff)
                }
                None => {
                    return Err(SemigroupError::NonConvergence {
                        t,
                        krylov_residual,
                        krylov_substeps,
                        cn_difference: diff,
                        cn_substeps: steps,
                        target: opts.rel_tol,
                    })
                }
            }
        }
    };

    let after = norm(&v);
    if after > before * (1.0 + 1e-12) {
        return Err(SemigroupError::ContractionViolation { before, after });
    }

    let result = op.embed(&v);
    let sup_norm = result.sup_norm();
    let excursion = result.min_entry().min(0.0);
    let nonneg_input = v0.min_entry() >= 0.0;
    let pos_tol = opts.pos_tol_factor * v0.sup_norm();
    if nonneg_input && excursion < -pos_tol {
        return Err(SemigroupError::PositivityViolation {
            excursion,
            tol: pos_tol,
        });
    }

    Ok(EvolveReport {
        result,
        t,
        path,
        substeps,
        krylov_dim,
        sup_norm,
        max_negative_excursion: excursion,
        residual_estimate: residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::CoefficientField;
    use crate::disc::{assemble_stiffness, Grid};
    use approx::assert_relative_eq;

    fn heat_setup(l: f64, n: usize) -> (StiffnessOperator, Grid) {
        let field = CoefficientField::identity(1);
        let grid = Grid::build(1, l, n).unwrap();
        let op = assemble_stiffness(&field, &grid, 0.0).unwrap();
        (op, grid)
    }

    #[test]
    fn zero_time_is_identity() {
        let (op, grid) = heat_setup(5.0, 101);
        let v0 = GridFunction::from_fn(&grid, |x| (-x[0] * x[0]).exp() - (-25.0f64).exp());
        // Make it exactly Dirichlet.
        let mut v0 = v0;
        for i in 0..grid.node_count() {
            if !grid.is_interior(i) {
                v0.values_mut()[i] = 0.0;
            }
        }
        let r = evolve(&op, &v0, 0.0, &EvolveOptions::default()).unwrap();
        assert_eq!(r.result.values(), v0.values());
        assert_eq!(r.path, SolverPath::Identity);
    }

    #[test]
    fn gaussian_spreads_with_correct_variance() {
        // Free heat flow: variance s0^2 + 2t, fitted by second moments.
        let (op, grid) = heat_setup(10.0, 801);
        let s0 = 0.5;
        let v0 = GridFunction::from_fn(&grid, |x| {
            if x[0].abs() >= 10.0 - 1e-12 {
                0.0
            } else {
                (-x[0] * x[0] / (2.0 * s0 * s0)).exp()
            }
        });
        let t = 0.25;
        let r = evolve(&op, &v0, t, &EvolveOptions::default()).unwrap();
        let vals = r.result.values();
        let mut x = [0.0];
        let (mut m0, mut m2) = (0.0, 0.0);
        for i in 0..grid.node_count() {
            grid.node_coord(i, &mut x);
            m0 += vals[i];
            m2 += x[0] * x[0] * vals[i];
        }
        let var = m2 / m0;
        assert_relative_eq!(var, s0 * s0 + 2.0 * t, max_relative = 0.01);
    }

    #[test]
    fn l2_contraction_and_positivity() {
        let (op, grid) = heat_setup(8.0, 401);
        let v0 = GridFunction::from_fn(&grid, |x| (1.0 - x[0] * x[0]).max(0.0));
        let r = evolve(&op, &v0, 0.4, &EvolveOptions::default()).unwrap();
        assert!(r.result.norm_l2() <= v0.norm_l2() * (1.0 + 1e-12));
        assert!(r.max_negative_excursion >= -1e-8 * v0.sup_norm());
    }

    #[test]
    fn semigroup_law() {
        let (op, grid) = heat_setup(8.0, 201);
        let v0 = GridFunction::from_fn(&grid, |x| (1.0 - x[0] * x[0] / 4.0).max(0.0).powi(2));
        let opts = EvolveOptions::default();
        let direct = evolve(&op, &v0, 0.3, &opts).unwrap();
        let first = evolve(&op, &v0, 0.1, &opts).unwrap();
        let second = evolve(&op, &first.result, 0.2, &opts).unwrap();
        let d = dist(direct.result.values(), second.result.values());
        let scale = (v0.values().iter().map(|v| v * v).sum::<f64>()).sqrt();
        assert!(d <= 1e-7 * scale, "semigroup defect {d}");
    }

    #[test]
    fn boundary_violation_rejected() {
        let (op, grid) = heat_setup(5.0, 51);
        let bad = GridFunction::from_fn(&grid, |_| 1.0);
        assert!(evolve(&op, &bad, 0.1, &EvolveOptions::default()).is_err());
    }

    #[test]
    fn negative_time_rejected() {
        let (op, grid) = heat_setup(5.0, 51);
        let v0 = GridFunction::zeros(&grid);
        assert!(matches!(
            evolve(&op, &v0, -1.0, &EvolveOptions::default()),
            Err(SemigroupError::NegativeTime(_))
        ));
    }

    #[test]
    fn stiff_field_still_converges() {
        // Strongly graded coefficients force restarts (or the fallback).
        let field = CoefficientField::isotropic(1, "(1+x1^2)^2", "explosive").unwrap();
        let grid = Grid::build(1, 20.0, 321).unwrap();
        let op = assemble_stiffness(&field, &grid, 0.0).unwrap();
        let v0 = GridFunction::from_fn(&grid, |x| (1.0 - (x[0] / 2.0).powi(2)).max(0.0));
        let r = evolve(&op, &v0, 0.1, &EvolveOptions::default()).unwrap();
        assert!(r.result.norm_l2() <= v0.norm_l2());
        assert!(r.substeps > 1);
    }
}
