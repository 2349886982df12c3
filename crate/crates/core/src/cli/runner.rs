//! Experiment execution: one config in, a JSON report, CSV payloads and a
//! list of named invariant outcomes out.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use thiserror::Error;

use super::config::{ConfigError, ExperimentConfig, ExperimentKind};
use super::presets::build_field;
use crate::analysis::{
    envelope_to_profiles, feller_oracle_1d, fit_gaussian_envelope, oscillation_extract,
    recover_lambda, recover_mu, EnvelopeWindow, FellerVerdict, GaussianEnvelope,
};
use crate::coeff::{
    ball_volume, classify_growth, ellipticity_scan, nu_profile, rho_distance, CoefficientField,
    RhoLimit,
};
use crate::disc::{assemble_stiffness, quadratic_form, Grid, GridFunction, StiffnessOperator};
use crate::semigroup::{
    davies_gaffney_check, epsilon_family_compare, grid_csv, heat_kernel_slice,
    kernel_symmetry_defect, mass_defect, EvolveOptions, KernelSlice, LipschitzWeight,
};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

/// Any error raised by the numerical layers maps to the numerical-failure
/// exit path.
fn num<E: std::fmt::Display>(e: E) -> RunError {
    RunError::Numerical(e.to_string())
}

/// One named pass/fail check attached to a run.
#[derive(Debug, Clone)]
pub struct Invariant {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Invariant {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Invariant {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

/// The full result of a run, before anything touches the filesystem.
#[derive(Debug)]
pub struct RunOutcome {
    /// Structured results (embedded in the report JSON under "results").
    pub results: serde_json::Value,
    pub invariants: Vec<Invariant>,
    /// CSV payloads: (file name, contents).
    pub files: Vec<(String, String)>,
}

impl RunOutcome {
    pub fn all_passed(&self) -> bool {
        self.invariants.iter().all(|i| i.passed)
    }
}

/// Relative slack tolerance for the Davies-Gaffney inequality checks.
const DG_SLACK_TOL: f64 = 1e-6;
/// Mass of a kernel slice may exceed 1 by at most this.
const MASS_TOL: f64 = 1e-8;
/// Agreement tolerance for the oscillation extrapolation.
const OSC_TOL: f64 = 0.05;

/// Centered smooth bump (1 - |x/r|^2)_+^2 (product over axes).
fn bump(grid: &Grid, r: f64) -> GridFunction {
    GridFunction::from_fn(grid, |x| {
        x.iter()
            .map(|&xi| {
                let u: f64 = 1.0 - (xi / r) * (xi / r);
                u.max(0.0) * u.max(0.0)
            })
            .product()
    })
}

fn require_times(cfg: &ExperimentConfig) -> Result<Vec<f64>, RunError> {
    if cfg.times.is_empty() {
        return Err(ConfigError::Invalid(format!(
            "experiment '{}' needs a non-empty times list",
            cfg.kind.name()
        ))
        .into());
    }
    if cfg.times.iter().any(|&t| !(t > 0.0)) {
        return Err(ConfigError::Invalid("times must be strictly positive".to_string()).into());
    }
    Ok(cfg.times.clone())
}

fn build_grid(d: usize, half_width: f64, n: usize) -> Result<Grid, RunError> {
    Grid::build(d, half_width, n).map_err(|e| ConfigError::Invalid(e.to_string()).into())
}

fn assemble(
    field: &CoefficientField,
    grid: &Grid,
    eps: f64,
) -> Result<StiffnessOperator, RunError> {
    assemble_stiffness(field, grid, eps).map_err(num)
}

/// File-name fragment for a time value (shortest round-trip formatting).
fn t_tag(t: f64) -> String {
    format!("{t}")
}

fn envelope_window(cfg: &ExperimentConfig) -> EnvelopeWindow {
    EnvelopeWindow {
        boundary_margin: cfg.analysis.boundary_margin,
        floor: cfg.analysis.floor,
        u_max: cfg.analysis.u_max,
    }
}

fn slice_invariants(slice: &KernelSlice, invariants: &mut Vec<Invariant>) {
    let tag = t_tag(slice.t);
    invariants.push(Invariant::new(
        format!("mass_submarkov_t{tag}"),
        slice.mass <= 1.0 + MASS_TOL,
        format!("mass = {}", slice.mass),
    ));
    invariants.push(Invariant::new(
        format!("kernel_nonnegative_t{tag}"),
        slice.max_negative_excursion <= 1e-8 * slice.density.sup_norm().max(1e-300),
        format!("max negative excursion = {}", slice.max_negative_excursion),
    ));
}

fn kernel_slices(
    op: &StiffnessOperator,
    times: &[f64],
    opts: &EvolveOptions,
    invariants: &mut Vec<Invariant>,
    files: &mut Vec<(String, String)>,
) -> Result<Vec<KernelSlice>, RunError> {
    let d = op.grid().dimension();
    let origin = vec![0.0; d];
    let mut slices = Vec::with_capacity(times.len());
    for &t in times {
        let slice = heat_kernel_slice(op, &origin, t, opts).map_err(num)?;
        slice_invariants(&slice, invariants);
        files.push((format!("kernel_t{}.csv", t_tag(t)), grid_csv(&slice.density)));
        slices.push(slice);
    }
    Ok(slices)
}

fn envelope_json(env: &GaussianEnvelope) -> serde_json::Value {
    json!({
        "d": env.d,
        "a": env.a,
        "b": env.b,
        "a_prime": env.a_prime,
        "b_prime": env.b_prime,
        "t_values": env.t_values,
        "u_range": [env.u_range.0, env.u_range.1],
        "n_points": env.n_points,
        "upper_residual": env.upper_residual,
        "lower_residual": env.lower_residual,
    })
}

fn envelope_invariants(env: &GaussianEnvelope, invariants: &mut Vec<Invariant>) {
    invariants.push(Invariant::new(
        "envelope_coverage",
        env.upper_residual <= 1e-9 && env.lower_residual <= 1e-9,
        format!(
            "upper residual = {}, lower residual = {}",
            env.upper_residual, env.lower_residual
        ),
    ));
    // The two bounds must not cross inside the fitted u-range (checked at
    // t = 1, where the squared distance equals u).
    let (u0, u1) = env.u_range;
    let crossed = (0..=64).any(|i| {
        let u = u0 + (u1 - u0) * i as f64 / 64.0;
        env.upper_at(u, 1.0) < env.lower_at(u, 1.0)
    });
    invariants.push(Invariant::new(
        "envelope_ordered",
        !crossed,
        format!("upper >= lower sampled on u in [{u0}, {u1}]"),
    ));
}

fn fmt_rho_limit(l: Option<RhoLimit>) -> String {
    match l {
        None => "unknown".to_string(),
        Some(RhoLimit::Divergent) => "divergent".to_string(),
        Some(RhoLimit::Finite(v)) => format!("finite({v})"),
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutcome, RunError> {
    let d = cfg.grid.d;
    let field = build_field(&cfg.field, d)?;
    let opts = EvolveOptions::default();
    let mut invariants = Vec::new();
    let mut files = Vec::new();

    let results = match cfg.kind {
        ExperimentKind::Scan => {
            let l = cfg.grid.single_half_width()?;
            let samples = cfg.grid.n.min(65);
            let scan = ellipticity_scan(&field, l, samples).map_err(num)?;
            invariants.push(Invariant::new(
                "ellipticity_order",
                scan.estimate.mu <= scan.estimate.lambda && scan.estimate.lambda.is_finite(),
                format!("mu = {}, lambda = {}", scan.estimate.mu, scan.estimate.lambda),
            ));
            // Seeded random vector: the assembled form must be PSD on it.
            let grid = build_grid(d, l, cfg.grid.n)?;
            let op = assemble(&field, &grid, 0.0)?;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let mut probe = GridFunction::from_fn(&grid, |_| rng.gen_range(-1.0..1.0));
            // Dirichlet admissibility: zero on the boundary.
            for i in 0..grid.node_count() {
                if !grid.is_interior(i) {
                    probe.values_mut()[i] = 0.0;
                }
            }
            let q = quadratic_form(&op, &probe).map_err(num)?;
            invariants.push(Invariant::new(
                "form_psd_on_probe",
                q >= -1e-12,
                format!("v'Av = {q} for a seeded random v"),
            ));
            let mut csv = String::from("sample,mu,lambda\n");
            for (i, (m, l)) in scan.mu_at.iter().zip(&scan.lambda_at).enumerate() {
                csv.push_str(&format!("{i},{m},{l}\n"));
            }
            files.push(("scan.csv".to_string(), csv));
            json!({
                "mu": scan.estimate.mu,
                "lambda": scan.estimate.lambda,
                "strictly_elliptic": scan.estimate.is_strictly_elliptic(),
                "samples_per_axis": samples,
            })
        }

        ExperimentKind::Growth => {
            let l = cfg.grid.single_half_width()?;
            let s_grid: Vec<f64> = (0..=400).map(|i| l * i as f64 / 400.0).collect();
            let profile = nu_profile(&field, &s_grid, cfg.analysis.angular_samples).map_err(num)?;
            let profile = rho_distance(&profile).map_err(num)?;
            let vol = ball_volume(&profile, d).map_err(num)?;
            let r_max = vol.max_finite_r();
            let verdict =
                classify_growth(&vol, (r_max / 10.0, r_max), (r_max / 10.0, r_max)).map_err(num)?;
            let rho = profile.rho().unwrap();
            invariants.push(Invariant::new(
                "rho_nondecreasing",
                rho.windows(2).all(|w| w[1] >= w[0]),
                "rho table is monotone",
            ));
            invariants.push(Invariant::new(
                "volume_nondecreasing",
                vol.log_volume().windows(2).all(|w| w[1] >= w[0]),
                "log-volume table is monotone",
            ));
            let mut csv = String::from("s,nu,rho\n");
            for ((s, n), r) in profile.s_grid().iter().zip(profile.nu()).zip(rho) {
                csv.push_str(&format!("{s},{n},{r}\n"));
            }
            files.push(("profile.csv".to_string(), csv));
            let mut vcsv = String::from("r,log_volume\n");
            for (r, v) in vol.r_grid().iter().zip(vol.log_volume()) {
                vcsv.push_str(&format!("{r},{v}\n"));
            }
            files.push(("volume.csv".to_string(), vcsv));
            json!({
                "rho_limit": fmt_rho_limit(profile.rho_limit()),
                "r_max_finite": r_max,
                "tikhonov": {
                    "verdict": format!("{:?}", verdict.tikhonov.verdict),
                    "log_a": verdict.tikhonov.log_a,
                    "b": verdict.tikhonov.b,
                    "trend_slope": verdict.tikhonov.trend_slope,
                    "notes": verdict.tikhonov.notes,
                },
                "tacklind": {
                    "verdict": format!("{:?}", verdict.tacklind.verdict),
                    "tail_exponent": verdict.tacklind.tail_exponent,
                    "notes": verdict.tacklind.notes,
                },
                "notes": verdict.notes,
            })
        }

        ExperimentKind::Kernel => {
            let times = require_times(cfg)?;
            let l = cfg.grid.single_half_width()?;
            let grid = build_grid(d, l, cfg.grid.n)?;
            let op = assemble(&field, &grid, 0.0)?;
            let slices = kernel_slices(&op, &times, &opts, &mut invariants, &mut files)?;
            // Symmetry spot check p_t(x, y) = p_t(y, x) at the largest time.
            let t_last = *times.last().unwrap();
            let mut x = vec![0.0; d];
            let mut y = vec![0.0; d];
            x[0] = -l / 8.0;
            y[0] = l / 8.0;
            let sym = kernel_symmetry_defect(&op, &x, &y, t_last, &opts).map_err(num)?;
            invariants.push(Invariant::new(
                "kernel_symmetric",
                sym <= 1e-6,
                format!("relative symmetry defect = {sym} at t = {t_last}"),
            ));
            json!({
                "slices": slices.iter().map(|s| json!({
                    "t": s.t,
                    "mass": s.mass,
                    "source": s.source,
                    "max_negative_excursion": s.max_negative_excursion,
                })).collect::<Vec<_>>(),
                "symmetry_defect": sym,
            })
        }

        ExperimentKind::Envelope => {
            let times = require_times(cfg)?;
            let l = cfg.grid.single_half_width()?;
            let grid = build_grid(d, l, cfg.grid.n)?;
            let op = assemble(&field, &grid, 0.0)?;
            let slices = kernel_slices(&op, &times, &opts, &mut invariants, &mut files)?;
            let env = fit_gaussian_envelope(&slices, &envelope_window(cfg)).map_err(num)?;
            envelope_invariants(&env, &mut invariants);
            json!({ "envelope": envelope_json(&env) })
        }

        ExperimentKind::Conserve => {
            let times = require_times(cfg)?;
            let l = cfg.grid.single_half_width()?;
            let grid = build_grid(d, l, cfg.grid.n)?;
            let op = assemble(&field, &grid, 0.0)?;
            let mut rows = Vec::new();
            let mut csv = String::from("t,initial_mass,final_mass,defect\n");
            for &t in &times {
                let r = mass_defect(&op, t, &opts).map_err(num)?;
                invariants.push(Invariant::new(
                    format!("defect_nonnegative_t{}", t_tag(t)),
                    r.defect >= -1e-10,
                    format!("defect = {}", r.defect),
                ));
                csv.push_str(&format!(
                    "{},{},{},{}\n",
                    r.t, r.initial_mass, r.final_mass, r.defect
                ));
                rows.push(json!({
                    "t": r.t,
                    "initial_mass": r.initial_mass,
                    "final_mass": r.final_mass,
                    "defect": r.defect,
                }));
            }
            files.push(("conserve.csv".to_string(), csv));
            json!({ "defects": rows })
        }

        ExperimentKind::Recover => {
            let times = require_times(cfg)?;
            let l = cfg.grid.single_half_width()?;
            let grid = build_grid(d, l, cfg.grid.n)?;
            let op = assemble(&field, &grid, 0.0)?;
            let slices = kernel_slices(&op, &times, &opts, &mut invariants, &mut files)?;
            let env = fit_gaussian_envelope(&slices, &envelope_window(cfg)).map_err(num)?;
            envelope_invariants(&env, &mut invariants);
            let pair = envelope_to_profiles(&env);
            let mu = recover_mu(&pair.rho, d).map_err(num)?;
            let lambda = recover_lambda(&pair.sigma, d, cfg.analysis.a_factor).map_err(num)?;
            invariants.push(Invariant::new(
                "recovered_order",
                mu > 0.0 && lambda.is_finite() && mu <= lambda * (1.0 + 1e-9),
                format!("mu_hat = {mu}, lambda_hat = {lambda}"),
            ));
            let scan = ellipticity_scan(&field, l, cfg.grid.n.min(65)).map_err(num)?;
            json!({
                "envelope": envelope_json(&env),
                "m_sigma": pair.m_sigma,
                "m_rho": pair.m_rho,
                "mu_recovered": mu,
                "lambda_recovered": lambda,
                "mu_scan": scan.estimate.mu,
                "lambda_scan": scan.estimate.lambda,
            })
        }

        ExperimentKind::Oscillate => {
            let l = cfg.grid.single_half_width()?;
            let grid = build_grid(d, l, cfg.grid.n)?;
            // Bump supported in |x| <= 2L/5, inside the inner half.
            let phi = GridFunction::from_fn(&grid, |x| {
                x.iter()
                    .map(|&xi| {
                        let u: f64 = 1.0 - (2.5 * xi / l) * (2.5 * xi / l);
                        u.max(0.0).powi(3)
                    })
                    .product()
            });
            let mut xi = vec![0.0; d];
            xi[0] = 1.0;
            let table = oscillation_extract(&field, &grid, &phi, &xi, &cfg.analysis.k_list)
                .map_err(num)?;
            if let Some(limit) = table.extrapolated {
                let rel = (limit - table.reference).abs() / table.reference.abs().max(1e-300);
                invariants.push(Invariant::new(
                    "extrapolation_matches_reference",
                    rel <= OSC_TOL,
                    format!(
                        "extrapolated = {limit}, reference = {}, relative gap = {rel}",
                        table.reference
                    ),
                ));
            }
            let mut csv = String::from("k,value,deviation,model_deviation\n");
            for r in &table.rows {
                csv.push_str(&format!(
                    "{},{},{},{}\n",
                    r.k, r.value, r.deviation, r.model_deviation
                ));
            }
            files.push(("oscillate.csv".to_string(), csv));
            json!({
                "reference": table.reference,
                "h_phi": table.h_phi,
                "extrapolated": table.extrapolated,
                "rows": table.rows.iter().map(|r| json!({
                    "k": r.k,
                    "value": r.value,
                    "deviation": r.deviation,
                    "model_deviation": r.model_deviation,
                })).collect::<Vec<_>>(),
            })
        }

        ExperimentKind::Dgcheck => {
            let times = require_times(cfg)?;
            let l = cfg.grid.single_half_width()?;
            let grid = build_grid(d, l, cfg.grid.n)?;
            let op = assemble(&field, &grid, 0.0)?;
            let weight =
                LipschitzWeight::clipped_distance(&field, &grid, l / 2.0, 0.0).map_err(num)?;
            let phi = bump(&grid, l / 8.0);
            let mut rows = Vec::new();
            let mut csv = String::from(
                "tau,t,lhs,rhs,slack,integrated_value,integrated_bound,integrated_slack\n",
            );
            for &tau in &cfg.analysis.tau_list {
                for &t in &times {
                    let r = davies_gaffney_check(&op, &field, &weight, &phi, tau, t, &opts)
                        .map_err(num)?;
                    invariants.push(Invariant::new(
                        format!("dg_l2_tau{tau}_t{}", t_tag(t)),
                        r.slack >= -DG_SLACK_TOL * r.rhs,
                        format!("slack = {} against rhs = {}", r.slack, r.rhs),
                    ));
                    invariants.push(Invariant::new(
                        format!("dg_energy_tau{tau}_t{}", t_tag(t)),
                        r.integrated_slack >= -DG_SLACK_TOL * r.integrated_bound,
                        format!(
                            "integrated slack = {} against bound = {}",
                            r.integrated_slack, r.integrated_bound
                        ),
                    ));
                    csv.push_str(&format!(
                        "{},{},{},{},{},{},{},{}\n",
                        r.tau,
                        r.t,
                        r.lhs,
                        r.rhs,
                        r.slack,
                        r.integrated_value,
                        r.integrated_bound,
                        r.integrated_slack
                    ));
                    rows.push(json!({
                        "tau": r.tau,
                        "t": r.t,
                        "lhs": r.lhs,
                        "rhs": r.rhs,
                        "slack": r.slack,
                        "integrated_value": r.integrated_value,
                        "integrated_bound": r.integrated_bound,
                        "integrated_slack": r.integrated_slack,
                        "quadrature_error": r.quadrature_error,
                    }));
                }
            }
            files.push(("dgcheck.csv".to_string(), csv));
            json!({ "gamma_bound": weight.gamma_bound(), "rows": rows })
        }

        ExperimentKind::Epsfamily => {
            let times = require_times(cfg)?;
            if cfg.epsilons.len() < 2 {
                return Err(ConfigError::Invalid(
                    "epsfamily needs at least 2 epsilon values".to_string(),
                )
                .into());
            }
            let l = cfg.grid.single_half_width()?;
            let grid = build_grid(d, l, cfg.grid.n)?;
            let v0 = bump(&grid, l / 4.0);
            let r = epsilon_family_compare(&field, &grid, &v0, times[0], &cfg.epsilons, &opts)
                .map_err(num)?;
            invariants.push(Invariant::new(
                "epsilon_cauchy_trend",
                r.cauchy_trend,
                "consecutive semigroup distances decrease",
            ));
            invariants.push(Invariant::new(
                "epsilon_form_monotone",
                r.form_monotone,
                "quadratic form decreases with epsilon",
            ));
            let mut csv = String::from("epsilon,form_value,distance_to_previous\n");
            for row in &r.rows {
                csv.push_str(&format!(
                    "{},{},{}\n",
                    row.epsilon,
                    row.form_value,
                    row.distance_to_previous
                        .map(|v| format!("{v}"))
                        .unwrap_or_default()
                ));
            }
            files.push(("epsfamily.csv".to_string(), csv));
            json!({
                "t": r.t,
                "cauchy_trend": r.cauchy_trend,
                "form_monotone": r.form_monotone,
                "rows": r.rows.iter().map(|row| json!({
                    "epsilon": row.epsilon,
                    "form_value": row.form_value,
                    "distance_to_previous": row.distance_to_previous,
                })).collect::<Vec<_>>(),
            })
        }

        ExperimentKind::Dichotomy => {
            if d != 1 {
                return Err(ConfigError::Invalid(
                    "dichotomy runs the 1-d Feller oracle; grid.d must be 1".to_string(),
                )
                .into());
            }
            let times = require_times(cfg)?;
            let t = *times.last().unwrap();
            let l_list = cfg.grid.half_width_list()?;
            if l_list.len() < 2 {
                return Err(ConfigError::Invalid(
                    "dichotomy needs at least 2 half_widths to see the trend".to_string(),
                )
                .into());
            }
            let oracle =
                feller_oracle_1d(field.entry(0, 0), cfg.analysis.feller_cutoff).map_err(num)?;
            // Defect magnitudes are O(1) observables; a relaxed solver
            // tolerance avoids substep escalation on the stiffest fields.
            let opts = EvolveOptions {
                rel_tol: 1e-6,
                ..EvolveOptions::default()
            };
            let mut defects = Vec::new();
            let mut csv = String::from("half_width,t,defect\n");
            for &l in &l_list {
                let grid = build_grid(1, l, cfg.grid.n)?;
                let op = assemble(&field, &grid, 0.0)?;
                let r = mass_defect(&op, t, &opts).map_err(num)?;
                csv.push_str(&format!("{l},{},{}\n", r.t, r.defect));
                defects.push((l, r.defect));
            }
            files.push(("dichotomy.csv".to_string(), csv));
            let first = defects.first().unwrap().1;
            let last = defects.last().unwrap().1;
            let (passed, detail) = match oracle.verdict {
                FellerVerdict::Conservative => (
                    last <= first.max(1e-12),
                    format!("oracle conservative; defect {first} -> {last} as L grows"),
                ),
                FellerVerdict::Explosive => (
                    last > 1e-6,
                    format!("oracle explosive; defect {first} -> {last} stays away from 0"),
                ),
                FellerVerdict::Inconclusive => {
                    (true, "oracle inconclusive; no trend demanded".to_string())
                }
            };
            invariants.push(Invariant::new("dichotomy_trend_matches_oracle", passed, detail));
            json!({
                "oracle": {
                    "verdict": format!("{:?}", oracle.verdict),
                    "tail_exponent_pos": oracle.tail_exponent_pos,
                    "tail_exponent_neg": oracle.tail_exponent_neg,
                    "increment_ratio_pos": oracle.increment_ratio_pos,
                    "increment_ratio_neg": oracle.increment_ratio_neg,
                    "cutoff": oracle.cutoff,
                },
                "t": t,
                "defects": defects.iter().map(|(l, v)| json!({
                    "half_width": l,
                    "defect": v,
                })).collect::<Vec<_>>(),
            })
        }
    };

    Ok(RunOutcome {
        results,
        invariants,
        files,
    })
}

#[cfg(test)]
mod tests {
    use super::super::config::parse_config;
    use super::*;

    fn run(toml_text: &str) -> RunOutcome {
        run_experiment(&parse_config(toml_text, &[]).unwrap()).unwrap()
    }

    #[test]
    fn scan_identity_passes() {
        let out = run(r#"
kind = "scan"
[field]
preset = "identity"
[grid]
d = 1
half_width = 4.0
n = 41
"#);
        assert!(out.all_passed(), "{:?}", out.invariants);
        assert_eq!(out.results["mu"], 1.0);
        assert!(out.files.iter().any(|(n, _)| n == "scan.csv"));
    }

    #[test]
    fn conserve_identity_small_defect() {
        let out = run(r#"
kind = "conserve"
times = [0.1]
[field]
preset = "identity"
[grid]
d = 1
half_width = 8.0
n = 321
"#);
        assert!(out.all_passed(), "{:?}", out.invariants);
        let defect = out.results["defects"][0]["defect"].as_f64().unwrap();
        assert!(defect.abs() < 1e-6, "defect = {defect}");
    }

    #[test]
    fn missing_times_is_config_error() {
        let cfg = parse_config(
            r#"
kind = "kernel"
[field]
preset = "identity"
[grid]
d = 1
half_width = 8.0
n = 161
"#,
            &[],
        )
        .unwrap();
        assert!(matches!(
            run_experiment(&cfg),
            Err(RunError::Config(_))
        ));
    }

    #[test]
    fn degenerate_scan_reports_zero_mu() {
        let out = run(r#"
kind = "scan"
[field]
preset = "degenerate"
[grid]
d = 1
half_width = 4.0
n = 41
"#);
        assert!(out.all_passed(), "{:?}", out.invariants);
        assert_eq!(out.results["strictly_elliptic"], false);
    }

    #[test]
    fn output_is_deterministic() {
        let text = r#"
kind = "oscillate"
[field]
preset = "sinusoidal"
[grid]
d = 1
half_width = 10.0
n = 401
[analysis]
k_list = [2.0, 4.0]
"#;
        let a = run(text);
        let b = run(text);
        assert_eq!(a.files, b.files);
        assert_eq!(
            serde_json::to_string(&a.results).unwrap(),
            serde_json::to_string(&b.results).unwrap()
        );
    }
}
