//! Config-driven experiment runner.
//!
//! Exit codes: 0 all invariant checks pass, 1 some invariant failed,
//! 2 configuration error, 3 numerical failure.

pub mod config;
pub mod presets;
pub mod runner;

use std::path::PathBuf;

use clap::Parser;
use serde_json::json;

pub use config::{parse_config, AnalysisSpec, ConfigError, ExperimentConfig, ExperimentKind};
pub use presets::{build_field, PRESETS};
pub use runner::{run_experiment, Invariant, RunError, RunOutcome};

#[derive(Debug, Parser)]
#[command(
    name = "divform",
    about = "Numerical laboratory for divergence-form diffusion operators"
)]
struct Cli {
    /// Experiment config (TOML or JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run a quick ellipticity scan of a named preset instead of a config.
    #[arg(long)]
    preset: Option<String>,
    /// Output directory for report.json and CSV payloads.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomized probe vectors (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; accepted for interface stability, the computation is
    /// single-threaded and deterministic.
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Dotted-path config overrides, e.g. --override grid.n=401 (repeatable).
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// List the preset catalog and exit.
    #[arg(long)]
    list_presets: bool,
}

const EXIT_OK: i32 = 0;
const EXIT_INVARIANT: i32 = 1;
const EXIT_CONFIG: i32 = 2;
const EXIT_NUMERICAL: i32 = 3;

/// Default config for `--preset NAME` without `--config`.
fn preset_config(name: &str) -> String {
    format!(
        "kind = \"scan\"\n[field]\npreset = \"{name}\"\n[grid]\nd = 1\nhalf_width = 10.0\nn = 201\n"
    )
}

fn load(cli: &Cli) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = match (&cli.config, &cli.preset) {
        (Some(path), None) => config::load_config(path, &cli.overrides)?,
        (None, Some(name)) => parse_config(&preset_config(name), &cli.overrides)?,
        (Some(_), Some(_)) => {
            return Err(ConfigError::Invalid(
                "give either --config or --preset, not both".to_string(),
            ))
        }
        (None, None) => {
            return Err(ConfigError::Invalid(
                "one of --config or --preset is required".to_string(),
            ))
        }
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = Some(out.clone());
    }
    Ok(cfg)
}

fn write_outputs(cfg: &ExperimentConfig, outcome: &RunOutcome) -> std::io::Result<()> {
    let Some(dir) = &cfg.out_dir else {
        return Ok(());
    };
    std::fs::create_dir_all(dir)?;
    for (name, contents) in &outcome.files {
        std::fs::write(dir.join(name), contents)?;
    }
    let report = json!({
        "kind": cfg.kind.name(),
        "seed": cfg.seed,
        "grid": {
            "d": cfg.grid.d,
            "n": cfg.grid.n,
            "half_width": cfg.grid.half_width,
            "half_widths": cfg.grid.half_widths,
        },
        "results": outcome.results,
        "invariants": outcome.invariants.iter().map(|i| json!({
            "name": i.name,
            "passed": i.passed,
            "detail": i.detail,
        })).collect::<Vec<_>>(),
        "all_passed": outcome.all_passed(),
    });
    std::fs::write(
        dir.join("report.json"),
        format!("{}\n", serde_json::to_string_pretty(&report).unwrap()),
    )
}

/// CLI entry point; returns the process exit code.
pub fn main() -> i32 {
    let cli = Cli::parse();
    let _ = cli.threads;

    if cli.list_presets {
        for p in PRESETS {
            let dim = p
                .dimension
                .map(|d| format!("d = {d}"))
                .unwrap_or_else(|| "any d".to_string());
            println!("{:<22} ({dim}): {}", p.name, p.summary);
        }
        return EXIT_OK;
    }

    let cfg = match load(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };

    let outcome = match run_experiment(&cfg) {
        Ok(o) => o,
        Err(RunError::Config(e)) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
        Err(e @ RunError::Numerical(_)) => {
            eprintln!("error: {e}");
            return EXIT_NUMERICAL;
        }
    };

    if let Err(e) = write_outputs(&cfg, &outcome) {
        eprintln!("error: cannot write outputs: {e}");
        return EXIT_NUMERICAL;
    }

    println!("experiment: {}", cfg.kind.name());
    for i in &outcome.invariants {
        let status = if i.passed { "pass" } else { "FAIL" };
        println!("invariant {}: {status} ({})", i.name, i.detail);
    }
    println!(
        "{}",
        serde_json::to_string_pretty(&outcome.results).unwrap()
    );
    if outcome.all_passed() {
        EXIT_OK
    } else {
        EXIT_INVARIANT
    }
}
