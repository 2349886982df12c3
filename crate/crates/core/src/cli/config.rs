//! Strict experiment configuration: TOML (or JSON) with unknown keys
//! rejected, plus dotted-path command-line overrides.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("override '{0}' is not of the form key.path=value")]
    BadOverride(String),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Scan,
    Growth,
    Kernel,
    Envelope,
    Conserve,
    Recover,
    Oscillate,
    Dgcheck,
    Epsfamily,
    Dichotomy,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Scan => "scan",
            ExperimentKind::Growth => "growth",
            ExperimentKind::Kernel => "kernel",
            ExperimentKind::Envelope => "envelope",
            ExperimentKind::Conserve => "conserve",
            ExperimentKind::Recover => "recover",
            ExperimentKind::Oscillate => "oscillate",
            ExperimentKind::Dgcheck => "dgcheck",
            ExperimentKind::Epsfamily => "epsfamily",
            ExperimentKind::Dichotomy => "dichotomy",
        }
    }
}

/// Field selection: a named preset (with optional parameter) or explicit
/// upper-triangle expressions.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    #[serde(default)]
    pub preset: Option<String>,
    /// Exponent parameter for parameterized presets (power-growth).
    #[serde(default)]
    pub p: Option<f64>,
    /// Upper-triangle expressions, row-major, for a custom field.
    #[serde(default)]
    pub exprs: Option<Vec<String>>,
    #[serde(default)]
    pub label: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub d: usize,
    /// Box half width L; `half_widths` supersedes it for L-sweep experiments.
    #[serde(default)]
    pub half_width: Option<f64>,
    #[serde(default)]
    pub half_widths: Option<Vec<f64>>,
    pub n: usize,
}

impl GridSpec {
    /// The list of half widths this config asks for (>= 1 entry).
    pub fn half_width_list(&self) -> Result<Vec<f64>, ConfigError> {
        match (&self.half_widths, self.half_width) {
            (Some(list), _) if !list.is_empty() => Ok(list.clone()),
            (_, Some(l)) => Ok(vec![l]),
            _ => Err(ConfigError::Invalid(
                "grid needs half_width or a non-empty half_widths list".to_string(),
            )),
        }
    }

    pub fn single_half_width(&self) -> Result<f64, ConfigError> {
        let list = self.half_width_list()?;
        Ok(list[0])
    }
}

fn default_floor() -> f64 {
    1e-300
}
fn default_a_factor() -> f64 {
    1.0
}
fn default_k_list() -> Vec<f64> {
    vec![4.0, 8.0, 16.0]
}
fn default_tau_list() -> Vec<f64> {
    vec![0.0, 0.5, 1.0, 2.0]
}
fn default_feller_cutoff() -> f64 {
    200.0
}
fn default_angular_samples() -> usize {
    16
}

/// Analysis windows and tolerances.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSpec {
    /// Envelope fitting: boundary margin (default L/4).
    #[serde(default)]
    pub boundary_margin: Option<f64>,
    #[serde(default = "default_floor")]
    pub floor: f64,
    #[serde(default)]
    pub u_max: Option<f64>,
    #[serde(default = "default_a_factor")]
    pub a_factor: f64,
    /// Wavenumbers for the oscillation experiment.
    #[serde(default = "default_k_list")]
    pub k_list: Vec<f64>,
    /// Weight strengths for the Davies-Gaffney experiment.
    #[serde(default = "default_tau_list")]
    pub tau_list: Vec<f64>,
    #[serde(default = "default_feller_cutoff")]
    pub feller_cutoff: f64,
    /// Angular samples for nu-profile spheres.
    #[serde(default = "default_angular_samples")]
    pub angular_samples: usize,
}

impl Default for AnalysisSpec {
    fn default() -> Self {
        AnalysisSpec {
            boundary_margin: None,
            floor: default_floor(),
            u_max: None,
            a_factor: default_a_factor(),
            k_list: default_k_list(),
            tau_list: default_tau_list(),
            feller_cutoff: default_feller_cutoff(),
            angular_samples: default_angular_samples(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub field: FieldSpec,
    pub grid: GridSpec,
    /// Evolution times.
    #[serde(default)]
    pub times: Vec<f64>,
    /// Epsilon list for the epsfamily experiment (strictly decreasing).
    #[serde(default)]
    pub epsilons: Vec<f64>,
    #[serde(default)]
    pub analysis: AnalysisSpec,
    /// Seed for randomized probe vectors.
    #[serde(default)]
    pub seed: u64,
    /// Output directory for CSV payloads and the report JSON.
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

/// Parse one `key.path=value` override into (path, JSON value).
fn parse_override(text: &str) -> Result<(Vec<String>, serde_json::Value), ConfigError> {
    let (path, raw) = text
        .split_once('=')
        .ok_or_else(|| ConfigError::BadOverride(text.to_string()))?;
    if path.is_empty() {
        return Err(ConfigError::BadOverride(text.to_string()));
    }
    let value = serde_json::from_str(raw)
        .unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
    Ok((path.split('.').map(str::to_string).collect(), value))
}

fn apply_override(
    root: &mut serde_json::Value,
    path: &[String],
    value: serde_json::Value,
) -> Result<(), ConfigError> {
    let mut node = root;
    for key in &path[..path.len() - 1] {
        node = node
            .as_object_mut()
            .ok_or_else(|| {
                ConfigError::Invalid(format!("override path '{}' crosses a non-table", key))
            })?
            .entry(key.clone())
            .or_insert_with(|| serde_json::Value::Object(Default::default()));
    }
    node.as_object_mut()
        .ok_or_else(|| ConfigError::Invalid("override target is not a table".to_string()))?
        .insert(path.last().unwrap().clone(), value);
    Ok(())
}

/// Load a config from TOML or JSON text, applying overrides before the
/// strict deserialization (so unknown keys in overrides also fail).
pub fn load_config(path: &Path, overrides: &[String]) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text, overrides)
}

pub fn parse_config(text: &str, overrides: &[String]) -> Result<ExperimentConfig, ConfigError> {
    // Accept TOML first, then JSON; normalize to a JSON value tree so the
    // overrides and the strict deserialization share one code path.
    let mut tree: serde_json::Value = match toml::from_str::<toml::Value>(text) {
        Ok(v) => serde_json::to_value(v).map_err(|e| ConfigError::Parse(e.to_string()))?,
        Err(toml_err) => serde_json::from_str(text).map_err(|json_err| {
            ConfigError::Parse(format!(
                "neither TOML ({toml_err}) nor JSON ({json_err})"
            ))
        })?,
    };
    for o in overrides {
        let (path, value) = parse_override(o)?;
        apply_override(&mut tree, &path, value)?;
    }
    serde_json::from_value(tree).map_err(|e| ConfigError::Parse(e.to_string()))
}
