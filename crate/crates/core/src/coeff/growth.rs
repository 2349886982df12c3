//! Coefficient growth functionals: the radial envelope nu(s), the adapted
//! distance rho(s), volumes of rho-balls, and the Tikhonov / Tacklind
//! growth classifiers.
//!
//! The asymptotic growth conditions are classified from finite windows by
//! trend fitting, with an explicit `Inconclusive` verdict when the data do
//! not decide.

use thiserror::Error;

use super::field::{CoefficientField, FieldError};
use crate::numerics::{interp_linear, linear_fit, simpson_doubling, unit_ball_volume};

/// Relative quadrature tolerance for the rho integral.
const RHO_QUAD_TOL: f64 = 1e-10;
/// Tail exponent band: a fitted decay exponent q <= 1 + Q_TOL of the
/// integrand (1+nu)^{-1/2} means rho diverges.
const Q_TOL: f64 = 0.05;
/// Tolerance on the trend slope of log|B|/r^2 in the Tikhonov check.
pub const TIKHONOV_SLOPE_TOL: f64 = 1e-3;
/// Band around the critical exponent 2 for the Tacklind tail fit.
pub const TACKLIND_P_TOL: f64 = 0.25;
/// Relative Cauchy tolerance for the Tacklind partial integrals.
pub const TACKLIND_CAUCHY_TOL: f64 = 1e-6;

/// Extrapolated behaviour of rho(s) as s -> infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RhoLimit {
    /// rho(s) -> infinity.
    Divergent,
    /// rho is bounded with the given extrapolated limit.
    Finite(f64),
}

/// Tabulated nu(s) = sup_{|x|<=s} ||C(x)|| and rho(s), the coefficient
/// adapted radial distance.
#[derive(Debug, Clone)]
pub struct GrowthProfile {
    s_grid: Vec<f64>,
    nu: Vec<f64>,
    rho: Option<Vec<f64>>,
    rho_limit: Option<RhoLimit>,
}

#[derive(Debug, Error)]
pub enum GrowthError {
    #[error("s_grid must be strictly increasing with at least 2 points")]
    BadGrid,
    #[error("rho part not filled; call rho_distance first")]
    RhoMissing,
    #[error("field evaluation failed: {0}")]
    Field(#[from] FieldError),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("{0}")]
    Precondition(String),
}

impl GrowthProfile {
    /// Build a profile directly from tabulated nu values (test and synthetic
    /// use). Values are forced monotone by a running maximum.
    pub fn from_nu(s_grid: Vec<f64>, nu: Vec<f64>) -> Result<Self, GrowthError> {
        if s_grid.len() < 2 || s_grid.len() != nu.len() {
            return Err(GrowthError::BadGrid);
        }
        if s_grid.windows(2).any(|w| w[0] >= w[1]) || s_grid[0] < 0.0 {
            return Err(GrowthError::BadGrid);
        }
        let mut run = f64::NEG_INFINITY;
        let nu = nu
            .into_iter()
            .map(|v| {
                run = run.max(v.max(0.0));
                run
            })
            .collect();
        Ok(GrowthProfile {
            s_grid,
            nu,
            rho: None,
            rho_limit: None,
        })
    }

    pub fn s_grid(&self) -> &[f64] {
        &self.s_grid
    }

    pub fn nu(&self) -> &[f64] {
        &self.nu
    }

    pub fn rho(&self) -> Option<&[f64]> {
        self.rho.as_deref()
    }

    pub fn rho_limit(&self) -> Option<RhoLimit> {
        self.rho_limit
    }

    /// nu at an arbitrary radius by linear interpolation (clamped outside).
    pub fn nu_at(&self, s: f64) -> f64 {
        interp_linear(&self.s_grid, &self.nu, s)
    }

    /// rho at an arbitrary radius by linear interpolation of the table.
    pub fn rho_at(&self, s: f64) -> Result<f64, GrowthError> {
        let rho = self.rho.as_ref().ok_or(GrowthError::RhoMissing)?;
        if s > *self.s_grid.last().unwrap() {
            return Err(GrowthError::Precondition(format!(
                "rho requested at s={s} beyond tabulated range {}",
                self.s_grid.last().unwrap()
            )));
        }
        Ok(interp_linear(&self.s_grid, rho, s))
    }

    pub fn max_radius(&self) -> f64 {
        *self.s_grid.last().unwrap()
    }
}

/// Deterministic unit directions used to probe |x| = s spheres.
pub fn sample_directions(d: usize, angular_samples: usize) -> Vec<Vec<f64>> {
    match d {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..angular_samples.max(4))
            .map(|j| {
                let th = 2.0 * std::f64::consts::PI * j as f64 / angular_samples.max(4) as f64;
                vec![th.cos(), th.sin()]
            })
            .collect(),
        3 => {
            // Fibonacci sphere.
            let m = angular_samples.max(8);
            let golden = (1.0 + 5.0_f64.sqrt()) / 2.0;
            (0..m)
                .map(|j| {
                    let z = 1.0 - 2.0 * (j as f64 + 0.5) / m as f64;
                    let r = (1.0 - z * z).sqrt();
                    let th = 2.0 * std::f64::consts::PI * j as f64 / golden;
                    vec![r * th.cos(), r * th.sin(), z]
                })
                .collect()
        }
        _ => panic!("dimension {d} out of range"),
    }
}

/// Tabulate nu(s) = max over sampled |x| <= s of ||C(x)||.
///
/// The sup over each ball is replaced by a max over a deterministic radial x
/// angular lattice; the running maximum makes the table monotone by
/// construction.
pub fn nu_profile(
    field: &CoefficientField,
    s_grid: &[f64],
    angular_samples: usize,
) -> Result<GrowthProfile, GrowthError> {
    if s_grid.len() < 2 || s_grid.windows(2).any(|w| w[0] >= w[1]) || s_grid[0] < 0.0 {
        return Err(GrowthError::BadGrid);
    }
    let d = field.dimension();
    let dirs = sample_directions(d, angular_samples);
    const RADIAL_REFINE: usize = 4;

    let origin = vec![0.0; d];
    let mut running = field.spectral_norm(&origin)?;
    let mut nu = Vec::with_capacity(s_grid.len());
    let mut prev_s = 0.0;
    let mut x = vec![0.0; d];
    for &s in s_grid {
        for k in 1..=RADIAL_REFINE {
            let r = prev_s + (s - prev_s) * k as f64 / RADIAL_REFINE as f64;
            if r == 0.0 {
                continue;
            }
            for dir in &dirs {
                for i in 0..d {
                    x[i] = r * dir[i];
                }
                running = running.max(field.spectral_norm(&x)?);
            }
        }
        nu.push(running);
        prev_s = s;
    }
    Ok(GrowthProfile {
        s_grid: s_grid.to_vec(),
        nu,
        rho: None,
        rho_limit: None,
    })
}

/// Fill the rho part: rho(s) = integral of (1 + nu(t))^{-1/2} from 0 to s,
/// with interval-doubling Simpson quadrature, plus a tail-fit extrapolation
/// of rho(infinity).
pub fn rho_distance(profile: &GrowthProfile) -> Result<GrowthProfile, GrowthError> {
    let s = &profile.s_grid;
    let mut rho = Vec::with_capacity(s.len());
    let mut acc = 0.0;
    let mut prev = 0.0;
    for &si in s {
        let mut integrand = |t: f64| (1.0 + profile.nu_at(t)).powf(-0.5);
        acc += simpson_doubling(&mut integrand, prev, si, RHO_QUAD_TOL);
        rho.push(acc);
        prev = si;
    }

    // Tail behaviour of the integrand decides whether rho diverges. Fit
    // (1+nu)^{-1/2} ~ c s^{-q} over the last quarter of the radial range.
    let s_max = *s.last().unwrap();
    let tail_lo = s_max / 4.0;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (&si, _) in s.iter().zip(rho.iter()) {
        if si >= tail_lo && si > 0.0 {
            let g = (1.0 + profile.nu_at(si)).powf(-0.5);
            if g > 0.0 {
                xs.push(si.ln());
                ys.push(g.ln());
            }
        }
    }
    let rho_limit = if xs.len() < 3 {
        RhoLimit::Divergent
    } else {
        let (lc, slope, _) = linear_fit(&xs, &ys);
        let q = -slope;
        if q <= 1.0 + Q_TOL {
            RhoLimit::Divergent
        } else {
            let c = lc.exp();
            let tail = c * s_max.powf(1.0 - q) / (q - 1.0);
            RhoLimit::Finite(acc + tail)
        }
    };

    Ok(GrowthProfile {
        s_grid: s.clone(),
        nu: profile.nu.clone(),
        rho: Some(rho),
        rho_limit: Some(rho_limit),
    })
}

/// Volumes |B_rho(r)| tabulated against r, stored as natural logs so that
/// doubly-exponential growth stays representable. `f64::INFINITY` in the log
/// column marks genuinely infinite volume (r beyond a bounded rho).
#[derive(Debug, Clone)]
pub struct VolumeTable {
    r_grid: Vec<f64>,
    log_volume: Vec<f64>,
    d: usize,
}

impl VolumeTable {
    /// Build directly from log-volumes (synthetic/test use).
    pub fn from_log_volumes(
        r_grid: Vec<f64>,
        log_volume: Vec<f64>,
        d: usize,
    ) -> Result<Self, GrowthError> {
        if r_grid.len() != log_volume.len() || r_grid.len() < 2 {
            return Err(GrowthError::BadGrid);
        }
        if r_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(GrowthError::BadGrid);
        }
        if log_volume.windows(2).any(|w| w[0] > w[1]) {
            return Err(GrowthError::Precondition(
                "volume must be non-decreasing".into(),
            ));
        }
        Ok(VolumeTable {
            r_grid,
            log_volume,
            d,
        })
    }

    pub fn r_grid(&self) -> &[f64] {
        &self.r_grid
    }

    pub fn log_volume(&self) -> &[f64] {
        &self.log_volume
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn has_infinite_volume(&self) -> bool {
        self.log_volume.iter().any(|v| v.is_infinite() && *v > 0.0)
    }

    /// log |B_rho(r)| interpolated linearly in r over the finite part.
    pub fn log_volume_at(&self, r: f64) -> f64 {
        let n_finite = self.log_volume.partition_point(|v| v.is_finite());
        interp_linear(&self.r_grid[..n_finite], &self.log_volume[..n_finite], r)
    }

    pub fn max_finite_r(&self) -> f64 {
        let n_finite = self.log_volume.partition_point(|v| v.is_finite());
        self.r_grid[n_finite.saturating_sub(1)]
    }
}

/// |B_rho(r)| by monotone inversion of the rho table.
///
/// The r-grid is taken as the tabulated rho values themselves, so the
/// inversion sigma(rho(s)) = s is exact on the table. If rho is bounded an
/// extra row just above rho(infinity) records the infinite volume.
pub fn ball_volume(profile: &GrowthProfile, d: usize) -> Result<VolumeTable, GrowthError> {
    let rho = profile.rho().ok_or(GrowthError::RhoMissing)?;
    let omega = unit_ball_volume(d);
    let mut r_grid = Vec::new();
    let mut log_volume = Vec::new();
    for (&s, &r) in profile.s_grid.iter().zip(rho.iter()) {
        if let Some(&last) = r_grid.last() {
            if r <= last {
                continue;
            }
        }
        r_grid.push(r);
        log_volume.push(if s > 0.0 {
            omega.ln() + d as f64 * s.ln()
        } else {
            f64::NEG_INFINITY
        });
    }
    if r_grid.len() < 2 {
        return Err(GrowthError::InsufficientData(
            "rho table collapses to fewer than 2 distinct radii".into(),
        ));
    }
    if let Some(RhoLimit::Finite(rho_inf)) = profile.rho_limit() {
        let r_inf = rho_inf.max(*r_grid.last().unwrap()) * (1.0 + 1e-9);
        r_grid.push(r_inf);
        log_volume.push(f64::INFINITY);
    }
    VolumeTable::from_log_volumes(r_grid, log_volume, d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TikhonovVerdict {
    Satisfied,
    Violated,
    Inconclusive,
}

#[derive(Debug, Clone)]
pub struct TikhonovResult {
    pub verdict: TikhonovVerdict,
    /// Fitted bound parameters: log |B| ~ log_a + b r^2 over the window.
    pub log_a: f64,
    pub b: f64,
    /// Trend slope of log|B|/r^2 against r (positive means super-Gaussian
    /// volume growth).
    pub trend_slope: f64,
    pub notes: Vec<String>,
}

/// Check the Gaussian volume-growth bound |B_rho(r)| <= a exp(b r^2) on a
/// finite window.
///
/// The bound is asymptotic, so the verdict is a trend classification: the
/// ratio log|B_rho(r)| / r^2 must not grow along the window. Any infinite
/// volume at finite r violates the bound outright.
pub fn tikhonov_check(
    vol: &VolumeTable,
    r_min: f64,
    r_max: f64,
) -> Result<TikhonovResult, GrowthError> {
    if r_min <= 0.0 || r_max <= r_min {
        return Err(GrowthError::Precondition(
            "fit window must satisfy 0 < r_min < r_max".into(),
        ));
    }
    let mut rs = Vec::new();
    let mut logs = Vec::new();
    for (&r, &lv) in vol.r_grid.iter().zip(vol.log_volume.iter()) {
        if r >= r_min && r <= r_max && lv.is_finite() {
            rs.push(r);
            logs.push(lv);
        }
    }
    if rs.len() < 8 {
        return Err(GrowthError::InsufficientData(format!(
            "need >= 8 finite volume samples in [{r_min}, {r_max}], got {}",
            rs.len()
        )));
    }

    let r2: Vec<f64> = rs.iter().map(|r| r * r).collect();
    let (log_a, b, _) = linear_fit(&r2, &logs);

    if vol.has_infinite_volume() {
        return Ok(TikhonovResult {
            verdict: TikhonovVerdict::Violated,
            log_a,
            b,
            trend_slope: f64::INFINITY,
            notes: vec!["infinite volume at finite r: rho is bounded".into()],
        });
    }

    let q: Vec<f64> = rs.iter().zip(&logs).map(|(&r, &lv)| lv / (r * r)).collect();
    let (_, slope, stderr) = linear_fit(&rs, &q);

    let verdict = if slope <= TIKHONOV_SLOPE_TOL {
        TikhonovVerdict::Satisfied
    } else if slope > 2.0 * stderr {
        TikhonovVerdict::Violated
    } else {
        TikhonovVerdict::Inconclusive
    };
    Ok(TikhonovResult {
        verdict,
        log_a,
        b,
        trend_slope: slope,
        notes: Vec::new(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TacklindVerdict {
    /// The integral of r / log|B_rho(r)| diverges: condition satisfied.
    Divergent,
    /// The integral converges: condition violated.
    Convergent,
    Inconclusive,
}

#[derive(Debug, Clone)]
pub struct TacklindResult {
    pub verdict: TacklindVerdict,
    /// Fitted tail exponent p in log|B_rho(r)| ~ c r^p.
    pub tail_exponent: Option<f64>,
    /// Partial integrals I(T) on the doubling sequence of T.
    pub partial_integrals: Vec<(f64, f64)>,
    pub notes: Vec<String>,
}

/// Probe divergence of the integral of r (log|B_rho(r)|)^{-1} over [R, inf).
///
/// Partial integrals are computed on a doubling sequence of upper limits and
/// the volume tail is fitted to log|B| ~ c r^p; p <= 2 with non-saturating
/// partial sums classifies as divergent, p > 2 with a Cauchy tail-corrected
/// sequence as convergent.
pub fn tacklind_check(vol: &VolumeTable, r_lo: f64, r_max: f64) -> Result<TacklindResult, GrowthError> {
    if r_lo <= 0.0 || r_max <= r_lo {
        return Err(GrowthError::Precondition(
            "need 0 < R < r_max".into(),
        ));
    }

    if vol.has_infinite_volume() {
        return Ok(TacklindResult {
            verdict: TacklindVerdict::Convergent,
            tail_exponent: None,
            partial_integrals: Vec::new(),
            notes: vec![
                "infinite volume at finite r: integrand vanishes beyond that radius (1/inf = 0) \
                 but the conservation machinery does not apply; flagged as violated"
                    .into(),
            ],
        });
    }

    let r_max = r_max.min(vol.max_finite_r());
    // Positive logs are needed so the integrand is defined.
    if vol.log_volume_at(r_lo) <= 0.0 {
        return Err(GrowthError::Precondition(format!(
            "volume must exceed 1 on [{r_lo}, {r_max}]"
        )));
    }
    if r_max < 4.0 * r_lo {
        return Err(GrowthError::InsufficientData(
            "need r_max >= 4 R for the doubling sequence".into(),
        ));
    }

    // Partial integrals on T = R, 2R, 4R, ...
    let mut partial = Vec::new();
    let mut acc = 0.0;
    let mut t_prev = r_lo;
    let mut t = 2.0 * r_lo;
    loop {
        let t_hi = t.min(r_max);
        let mut integrand = |r: f64| r / vol.log_volume_at(r);
        acc += simpson_doubling(&mut integrand, t_prev, t_hi, 1e-9);
        partial.push((t_hi, acc));
        if t_hi >= r_max {
            break;
        }
        t_prev = t_hi;
        t *= 2.0;
    }

    // Tail exponent from the last decade of the table.
    let tail_lo = r_max / 10.0;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (&r, &lv) in vol.r_grid.iter().zip(vol.log_volume.iter()) {
        if r >= tail_lo && r <= r_max && lv.is_finite() && lv > 0.0 {
            xs.push(r.ln());
            ys.push(lv.ln());
        }
    }
    if xs.len() < 3 || partial.len() < 3 {
        return Err(GrowthError::InsufficientData(
            "too few samples for the tail fit".into(),
        ));
    }
    let (lc, p, _) = linear_fit(&xs, &ys);

    let verdict = if p <= 2.0 + TACKLIND_P_TOL {
        // Divergent candidate: the doubling increments must not saturate.
        let saturated = partial.windows(2).rev().take(2).all(|w| {
            let inc = w[1].1 - w[0].1;
            inc <= TACKLIND_CAUCHY_TOL * w[1].1.abs().max(1.0)
        });
        if saturated {
            TacklindVerdict::Inconclusive
        } else {
            TacklindVerdict::Divergent
        }
    } else {
        // Convergent candidate: correct each partial integral by the fitted
        // model tail int_T^inf r^{1-p}/c dr and require a Cauchy sequence.
        let c = lc.exp();
        let corrected: Vec<f64> = partial
            .iter()
            .map(|&(t, i)| i + t.powf(2.0 - p) / (c * (p - 2.0)))
            .collect();
        let cauchy = corrected.windows(2).rev().take(2).all(|w| {
            (w[1] - w[0]).abs() <= 1e-4 * w[1].abs().max(1.0)
        });
        if cauchy {
            TacklindVerdict::Convergent
        } else {
            TacklindVerdict::Inconclusive
        }
    };

    Ok(TacklindResult {
        verdict,
        tail_exponent: Some(p),
        partial_integrals: partial,
        notes: Vec::new(),
    })
}

/// Combined growth verdict with the structural implication "Tikhonov
/// satisfied => Tacklind divergent" enforced (the former is the strictly
/// stronger condition).
#[derive(Debug, Clone)]
pub struct GrowthVerdict {
    pub tikhonov: TikhonovResult,
    pub tacklind: TacklindResult,
    pub notes: Vec<String>,
}

pub fn classify_growth(
    vol: &VolumeTable,
    tikhonov_window: (f64, f64),
    tacklind_range: (f64, f64),
) -> Result<GrowthVerdict, GrowthError> {
    let tik = tikhonov_check(vol, tikhonov_window.0, tikhonov_window.1)?;
    let mut tac = tacklind_check(vol, tacklind_range.0, tacklind_range.1)?;
    let mut notes = Vec::new();
    if tik.verdict == TikhonovVerdict::Satisfied
        && tac.verdict == TacklindVerdict::Inconclusive
    {
        tac.verdict = TacklindVerdict::Divergent;
        notes.push(
            "promoted Tacklind to divergent: the Gaussian volume bound holds and is strictly stronger"
                .into(),
        );
    }
    Ok(GrowthVerdict {
        tikhonov: tik,
        tacklind: tac,
        notes,
    })
}
