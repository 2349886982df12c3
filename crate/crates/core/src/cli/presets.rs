//! Named coefficient-field presets for the command line.

use super::config::{ConfigError, FieldSpec};
use crate::coeff::CoefficientField;

/// One catalog entry: name, dimension constraint (None = any), summary.
pub struct PresetInfo {
    pub name: &'static str,
    pub dimension: Option<usize>,
    pub summary: &'static str,
}

pub const PRESETS: &[PresetInfo] = &[
    PresetInfo {
        name: "identity",
        dimension: None,
        summary: "C = I, the free Laplacian",
    },
    PresetInfo {
        name: "constant-anisotropic",
        dimension: Some(2),
        summary: "C = diag(1, 3), constant anisotropy in d = 2",
    },
    PresetInfo {
        name: "sinusoidal",
        dimension: None,
        summary: "c(x) = 1.5 + 0.5 sin(x1), uniformly elliptic oscillation",
    },
    PresetInfo {
        name: "power-growth",
        dimension: None,
        summary: "c(x) = (1 + |x1|)^p, polynomial growth (parameter p, default 2)",
    },
    PresetInfo {
        name: "degenerate",
        dimension: None,
        summary: "c(x) = x1^2, degenerate at the hyperplane x1 = 0",
    },
    PresetInfo {
        name: "explosive",
        dimension: None,
        summary: "c(x) = (1 + x1^2)^2, fast growth with finite mass leakage",
    },
    PresetInfo {
        name: "tikhonov-boundary",
        dimension: None,
        summary: "c(x) = (1 + |x1|)^2 log(2 + |x1|), borderline growth",
    },
];

/// Build the coefficient field requested by a [`FieldSpec`] in dimension `d`.
pub fn build_field(spec: &FieldSpec, d: usize) -> Result<CoefficientField, ConfigError> {
    match (&spec.preset, &spec.exprs) {
        (Some(_), Some(_)) => Err(ConfigError::Invalid(
            "field: give either a preset or exprs, not both".to_string(),
        )),
        (None, None) => Err(ConfigError::Invalid(
            "field: give a preset name or explicit exprs".to_string(),
        )),
        (None, Some(exprs)) => {
            let label = spec.label.clone().unwrap_or_else(|| "custom".to_string());
            let refs: Vec<&str> = exprs.iter().map(String::as_str).collect();
            CoefficientField::from_exprs(d, &refs, &label)
                .map_err(|e| ConfigError::Invalid(format!("field exprs: {e}")))
        }
        (Some(name), None) => {
            if spec.p.is_some() && name != "power-growth" {
                return Err(ConfigError::Invalid(format!(
                    "field: parameter p only applies to power-growth, not {name}"
                )));
            }
            let info = PRESETS
                .iter()
                .find(|p| p.name == name.as_str())
                .ok_or_else(|| {
                    ConfigError::Invalid(format!(
                        "unknown preset '{name}'; known: {}",
                        PRESETS
                            .iter()
                            .map(|p| p.name)
                            .collect::<Vec<_>>()
                            .join(", ")
                    ))
                })?;
            if let Some(need) = info.dimension {
                if need != d {
                    return Err(ConfigError::Invalid(format!(
                        "preset '{name}' requires d = {need}, grid has d = {d}"
                    )));
                }
            }
            let field = match name.as_str() {
                "identity" => CoefficientField::identity(d),
                "constant-anisotropic" => {
                    CoefficientField::from_exprs(2, &["1", "0", "3"], "constant-anisotropic")
                        .map_err(|e| ConfigError::Invalid(e.to_string()))?
                }
                "sinusoidal" => CoefficientField::isotropic(d, "1.5+0.5*sin(x1)", "sinusoidal")
                    .map_err(|e| ConfigError::Invalid(e.to_string()))?,
                "power-growth" => {
                    let p = spec.p.unwrap_or(2.0);
                    if !p.is_finite() || p < 0.0 {
                        return Err(ConfigError::Invalid(format!(
                            "power-growth exponent must be finite and >= 0, got {p}"
                        )));
                    }
                    let expr = format!("(1+abs(x1))^{p}");
                    CoefficientField::isotropic(d, &expr, &format!("power-growth-p{p}"))
                        .map_err(|e| ConfigError::Invalid(e.to_string()))?
                }
                "degenerate" => CoefficientField::isotropic(d, "x1^2", "degenerate")
                    .map_err(|e| ConfigError::Invalid(e.to_string()))?,
                "explosive" => CoefficientField::isotropic(d, "(1+x1^2)^2", "explosive")
                    .map_err(|e| ConfigError::Invalid(e.to_string()))?,
                "tikhonov-boundary" => CoefficientField::isotropic(
                    d,
                    "(1+abs(x1))^2*log(2+abs(x1))",
                    "tikhonov-boundary",
                )
                .map_err(|e| ConfigError::Invalid(e.to_string()))?,
                _ => unreachable!("catalog and builder lists agree"),
            };
            Ok(field)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(preset: &str) -> FieldSpec {
        FieldSpec {
            preset: Some(preset.to_string()),
            p: None,
            exprs: None,
            label: None,
        }
    }

    #[test]
    fn every_preset_builds() {
        for info in PRESETS {
            let d = info.dimension.unwrap_or(1);
            let field = build_field(&spec(info.name), d).unwrap();
            let c = field.eval_matrix(&vec![0.5; d]).unwrap();
            assert!(c[(0, 0)].is_finite());
        }
    }

    #[test]
    fn power_growth_takes_parameter() {
        let mut s = spec("power-growth");
        s.p = Some(3.0);
        let field = build_field(&s, 1).unwrap();
        let c = field.eval_matrix(&[1.0]).unwrap();
        assert!((c[(0, 0)] - 8.0).abs() < 1e-12);
    }

    #[test]
    fn bad_requests_rejected() {
        assert!(build_field(&spec("nope"), 1).is_err());
        assert!(build_field(&spec("constant-anisotropic"), 1).is_err());
        let mut s = spec("identity");
        s.p = Some(2.0);
        assert!(build_field(&s, 1).is_err());
        let none = FieldSpec {
            preset: None,
            p: None,
            exprs: None,
            label: None,
        };
        assert!(build_field(&none, 1).is_err());
    }

    #[test]
    fn custom_exprs_build() {
        let s = FieldSpec {
            preset: None,
            p: None,
            exprs: Some(vec!["2".to_string()]),
            label: Some("two".to_string()),
        };
        let field = build_field(&s, 1).unwrap();
        assert_eq!(field.label(), "two");
    }
}
