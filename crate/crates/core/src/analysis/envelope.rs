//! Two-sided Gaussian envelope fitting: find a, b, a', b' with
//! a G_{b;t}(x-y) >= K_t(x;y) >= a' G_{b';t}(x-y) on a fitting window,
//! where G_{b;t}(x) = t^{-d/2} e^{-b |x|^2 / t}.
//!
//! In the coordinates u = |x-y|^2/t, w = log(t^{d/2} K) both bounds are
//! affine: w <= log a - b u and w >= log a' - b' u. For a fixed slope the
//! minimal feasible intercept is a maximum (resp. minimum) over the sampled
//! points, so fitting reduces to a one-dimensional search over the slope.
//! The slope is chosen to minimize the mean residual gap, which is a convex
//! piecewise-linear objective: a 200-point log-spaced candidate grid
//! brackets the optimum and one golden-section refinement inside the
//! bracketing cell pins it down. A least-squares fit would not certify the
//! uniform bound, which is the whole point of Eq.-(1.3)-style envelopes.

use super::AnalysisError;
use crate::semigroup::KernelSlice;

/// Sample-selection window for the fit.
#[derive(Debug, Clone)]
pub struct EnvelopeWindow {
    /// Nodes closer than this to the box boundary are excluded (Dirichlet
    /// truncation destroys the lower bound there). `None` means L/4.
    pub boundary_margin: Option<f64>,
    /// Kernel values below this are excluded from the upper fit and make the
    /// lower fit infeasible.
    pub floor: f64,
    /// Only samples with u = |x-y|^2/t <= u_max are used (`None`: no cap).
    pub u_max: Option<f64>,
}

impl Default for EnvelopeWindow {
    fn default() -> Self {
        EnvelopeWindow {
            boundary_margin: None,
            floor: 1e-300,
            u_max: None,
        }
    }
}

/// Fitted two-sided envelope with its coverage residuals.
#[derive(Debug, Clone)]
pub struct GaussianEnvelope {
    pub d: usize,
    pub a: f64,
    pub b: f64,
    pub a_prime: f64,
    pub b_prime: f64,
    pub t_values: Vec<f64>,
    pub u_range: (f64, f64),
    pub n_points: usize,
    /// Largest amount (log scale) by which any sample exceeds the upper
    /// envelope; <= 1e-9 by construction.
    pub upper_residual: f64,
    /// Largest amount (log scale) by which any sample undershoots the lower
    /// envelope; <= 1e-9 by construction.
    pub lower_residual: f64,
}

/// Coverage tolerance on the log scale.
const COVERAGE_TOL: f64 = 1e-9;
/// Slope candidates per grid pass.
const SLOPE_CANDIDATES: usize = 200;
/// Half-width (multiplicative) of the initial candidate range around the
/// least-squares slope estimate.
const SLOPE_SPAN: f64 = 30.0;

/// Mean-gap objective for the upper envelope at slope b:
/// max_i(w_i + b u_i) - mean(w_i + b u_i). Convex in b.
fn upper_gap(points: &[(f64, f64)], b: f64, u_mean: f64, w_mean: f64) -> f64 {
    let m = points
        .iter()
        .map(|&(u, w)| w + b * u)
        .fold(f64::NEG_INFINITY, f64::max);
    m - (w_mean + b * u_mean)
}

/// Mean-gap objective for the lower envelope: mean - min. Convex in b.
fn lower_gap(points: &[(f64, f64)], b: f64, u_mean: f64, w_mean: f64) -> f64 {
    let m = points
        .iter()
        .map(|&(u, w)| w + b * u)
        .fold(f64::INFINITY, f64::min);
    (w_mean + b * u_mean) - m
}

/// Minimize a convex objective over [lo, hi] by golden-section search.
fn golden_min(mut f: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    const INVPHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = hi - INVPHI * (hi - lo);
    let mut x2 = lo + INVPHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..200 {
        if hi - lo <= 1e-12 * hi.abs().max(1e-12) {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INVPHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INVPHI * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

/// One slope fit: candidate grid around the least-squares slope, then a
/// golden-section refinement in the bracketing cell.
fn fit_slope(points: &[(f64, f64)], gap: impl Fn(&[(f64, f64)], f64, f64, f64) -> f64) -> f64 {
    let n = points.len() as f64;
    let u_mean = points.iter().map(|p| p.0).sum::<f64>() / n;
    let w_mean = points.iter().map(|p| p.1).sum::<f64>() / n;

    // Least-squares slope of w vs u as the center of the candidate range.
    let mut suu = 0.0;
    let mut suw = 0.0;
    for &(u, w) in points {
        suu += (u - u_mean) * (u - u_mean);
        suw += (u - u_mean) * (w - w_mean);
    }
    let b_ls = if suu > 0.0 { (-suw / suu).max(1e-8) } else { 1.0 };

    let lo = b_ls / SLOPE_SPAN;
    let hi = b_ls * SLOPE_SPAN;
    let ratio = (hi / lo).powf(1.0 / (SLOPE_CANDIDATES - 1) as f64);
    let mut best_k = 0;
    let mut best_val = f64::INFINITY;
    for k in 0..SLOPE_CANDIDATES {
        let b = lo * ratio.powi(k as i32);
        let g = gap(points, b, u_mean, w_mean);
        if g < best_val {
            best_val = g;
            best_k = k;
        }
    }
    let cell_lo = lo * ratio.powi(best_k.saturating_sub(1) as i32);
    let cell_hi = lo * ratio.powi(((best_k + 1).min(SLOPE_CANDIDATES - 1)) as i32);
    golden_min(|b| gap(points, b, u_mean, w_mean), cell_lo, cell_hi)
}

/// Fit the two-sided Gaussian envelope to a family of kernel slices.
pub fn fit_gaussian_envelope(
    slices: &[KernelSlice],
    window: &EnvelopeWindow,
) -> Result<GaussianEnvelope, AnalysisError> {
    if slices.is_empty() {
        return Err(AnalysisError::EmptyWindow("no slices supplied".to_string()));
    }
    let d = slices[0].density.grid().dimension();
    let mut t_values: Vec<f64> = slices.iter().map(|s| s.t).collect();
    t_values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    t_values.dedup();
    if t_values.len() < 2 {
        return Err(AnalysisError::TooFewTimes(t_values.len()));
    }

    let mut points: Vec<(f64, f64)> = Vec::new();
    let mut below_floor = 0usize;
    for slice in slices {
        let grid = slice.density.grid();
        if grid.dimension() != d {
            return Err(AnalysisError::Precondition(
                "slices live on grids of different dimension".to_string(),
            ));
        }
        let l = grid.half_width();
        let margin = window.boundary_margin.unwrap_or(l / 4.0);
        let mut x = vec![0.0; d];
        for (i, &k) in slice.density.values().iter().enumerate() {
            grid.node_coord(i, &mut x);
            if x.iter().any(|&xi| l - xi.abs() < margin) {
                continue;
            }
            let r2: f64 = x
                .iter()
                .zip(&slice.source)
                .map(|(&xi, &yi)| (xi - yi) * (xi - yi))
                .sum();
            let u = r2 / slice.t;
            if let Some(umax) = window.u_max {
                if u > umax {
                    continue;
                }
            }
            if k < window.floor {
                below_floor += 1;
                continue;
            }
            let w = (slice.t.powf(d as f64 / 2.0) * k).ln();
            points.push((u, w));
        }
    }
    if points.is_empty() {
        return Err(AnalysisError::EmptyWindow(format!(
            "no samples inside the window ({below_floor} below floor)"
        )));
    }
    if below_floor > 0 {
        // A positive lower Gaussian bound cannot hold where K vanishes.
        return Err(AnalysisError::NoLowerBound);
    }

    let b = fit_slope(&points, upper_gap);
    let b_prime = fit_slope(&points, lower_gap);
    let log_a = points
        .iter()
        .map(|&(u, w)| w + b * u)
        .fold(f64::NEG_INFINITY, f64::max);
    let log_a_prime = points
        .iter()
        .map(|&(u, w)| w + b_prime * u)
        .fold(f64::INFINITY, f64::min);

    // Coverage on the log scale, by construction of the intercepts.
    let mut upper_residual: f64 = 0.0;
    let mut lower_residual: f64 = 0.0;
    for &(u, w) in &points {
        upper_residual = upper_residual.max(w - (log_a - b * u));
        lower_residual = lower_residual.max((log_a_prime - b_prime * u) - w);
    }
    for (res, side, &(u, w)) in [
        (upper_residual, "upper", points.first().unwrap()),
        (lower_residual, "lower", points.first().unwrap()),
    ] {
        if res > COVERAGE_TOL {
            return Err(AnalysisError::CoverageViolation {
                u,
                w,
                side,
                gap: res,
            });
        }
    }

    let u_min = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let u_max = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    Ok(GaussianEnvelope {
        d,
        a: log_a.exp(),
        b,
        a_prime: log_a_prime.exp(),
        b_prime,
        t_values,
        u_range: (u_min, u_max),
        n_points: points.len(),
        upper_residual,
        lower_residual,
    })
}

impl GaussianEnvelope {
    /// Upper envelope value a G_{b;t}(x) at squared distance r2.
    pub fn upper_at(&self, r2: f64, t: f64) -> f64 {
        self.a * t.powf(-(self.d as f64) / 2.0) * (-self.b * r2 / t).exp()
    }

    /// Lower envelope value a' G_{b';t}(x).
    pub fn lower_at(&self, r2: f64, t: f64) -> f64 {
        self.a_prime * t.powf(-(self.d as f64) / 2.0) * (-self.b_prime * r2 / t).exp()
    }
}
