//! Experiment configuration: JSON files with a `preset` shortcut, merged
//! with command-line overrides into a fully validated plan.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use dualstop_core::models::{BermudanCallModel, MarketModel, StylizedModel};
use dualstop_core::randomize::{RandomizerSpec, XiLaw};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Stylized,
    Bermudan {
        s0: f64,
        sigma2: f64,
        kappa1: f64,
        kappa2: f64,
    },
    Tree {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    SingleDoobScalar,
    Msty,
    Hermite { k: usize, l: usize },
    Custom { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum XiLawCfg {
    #[default]
    Uniform,
    Texp,
}

impl XiLawCfg {
    pub fn to_core(self) -> XiLaw {
        match self {
            XiLawCfg::Uniform => XiLaw::Uniform,
            XiLawCfg::Texp => XiLaw::Texp,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RandomizerCfg {
    None,
    Optimal {
        theta: f64,
        #[serde(default)]
        xi_law: XiLawCfg,
    },
    Naive {
        /// One scale per date; omitted in a config file it falls back to
        /// the preset's standard choice.
        theta: Option<Vec<f64>>,
        #[serde(default)]
        xi_law: XiLawCfg,
    },
}

/// Raw configuration file; every field optional so presets can fill the
/// gaps and explicit fields win.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub preset: Option<String>,
    pub model: Option<ModelSpec>,
    pub family: Option<FamilySpec>,
    pub randomizer: Option<RandomizerCfg>,
    pub n_paths: Option<usize>,
    pub n_test_paths: Option<usize>,
    pub seed: Option<u64>,
    pub outdir: Option<PathBuf>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<ConfigFile> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("cannot parse config {}: {e}", path.display())))
    }
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub preset: Option<String>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

/// Fully resolved and validated experiment plan.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub preset: Option<String>,
    pub model: ModelSpec,
    pub family: FamilySpec,
    pub randomizer: RandomizerCfg,
    pub n_paths: usize,
    pub n_test_paths: usize,
    pub seed: u64,
    pub outdir: PathBuf,
}

struct PresetDefaults {
    model: ModelSpec,
    family: FamilySpec,
    naive_theta0: f64,
}

fn preset_defaults(name: &str) -> Result<PresetDefaults> {
    match name {
        "stylized" => Ok(PresetDefaults {
            model: ModelSpec::Stylized,
            family: FamilySpec::SingleDoobScalar,
            naive_theta0: 0.16,
        }),
        "pa1" => Ok(PresetDefaults {
            model: ModelSpec::Bermudan {
                s0: 2.0,
                sigma2: 0.04,
                kappa1: 2.0,
                kappa2: 2.5,
            },
            family: FamilySpec::Msty,
            naive_theta0: 1.6,
        }),
        "pa2" => Ok(PresetDefaults {
            model: ModelSpec::Bermudan {
                s0: 2.0,
                sigma2: 1.0 / 3.0,
                kappa1: 2.0,
                kappa2: 3.0,
            },
            family: FamilySpec::Msty,
            naive_theta0: 4.8,
        }),
        other => Err(CliError::Config(format!(
            "unknown preset '{other}' (expected stylized, pa1 or pa2)"
        ))),
    }
}

/// The standard naive scale for a preset: `theta_0` as above and zero at
/// the later dates.
pub fn naive_theta_preset(name: &str) -> Result<Vec<f64>> {
    Ok(vec![preset_defaults(name)?.naive_theta0, 0.0, 0.0])
}

pub fn resolve(file: ConfigFile, overrides: &Overrides) -> Result<ExperimentConfig> {
    let preset = overrides.preset.clone().or(file.preset);
    let defaults = match preset.as_deref() {
        Some(name) => Some(preset_defaults(name)?),
        None => None,
    };

    let model = file
        .model
        .or_else(|| defaults.as_ref().map(|d| d.model.clone()))
        .ok_or_else(|| CliError::Config("a model (or a preset) is required".to_string()))?;
    let family = file
        .family
        .or_else(|| defaults.as_ref().map(|d| d.family.clone()))
        .unwrap_or(FamilySpec::SingleDoobScalar);
    let randomizer = file.randomizer.unwrap_or(RandomizerCfg::Optimal {
        theta: 1.0,
        xi_law: XiLawCfg::Uniform,
    });
    let seed = overrides.seed.or(file.seed).ok_or_else(|| {
        CliError::Config("a seed is required, via the config file or --seed".to_string())
    })?;
    let config = ExperimentConfig {
        preset,
        model,
        family,
        randomizer,
        n_paths: file.n_paths.unwrap_or(2000),
        n_test_paths: file.n_test_paths.unwrap_or(100_000),
        seed,
        outdir: overrides
            .out
            .clone()
            .or(file.outdir)
            .unwrap_or_else(|| PathBuf::from(".")),
    };
    validate(&config)?;
    Ok(config)
}

fn validate(config: &ExperimentConfig) -> Result<()> {
    if config.n_paths < 1 {
        return Err(CliError::Config("n_paths must be at least 1".to_string()));
    }
    if config.n_test_paths < 1 {
        return Err(CliError::Config(
            "n_test_paths must be at least 1".to_string(),
        ));
    }
    match &config.model {
        ModelSpec::Bermudan {
            s0,
            sigma2,
            kappa1,
            kappa2,
        } => {
            BermudanCallModel::new(*s0, *sigma2, *kappa1, *kappa2)
                .map_err(|e| CliError::Config(e.to_string()))?;
        }
        ModelSpec::Tree { path } => {
            if !path.exists() {
                return Err(CliError::Config(format!(
                    "tree file {} does not exist",
                    path.display()
                )));
            }
        }
        ModelSpec::Stylized => {}
    }
    match &config.family {
        FamilySpec::Msty => {
            if !matches!(config.model, ModelSpec::Bermudan { .. }) {
                return Err(CliError::Config(
                    "the msty family is defined for the bermudan model".to_string(),
                ));
            }
        }
        FamilySpec::Hermite { k, l } => {
            if !matches!(config.model, ModelSpec::Bermudan { .. }) {
                return Err(CliError::Config(
                    "the hermite family is defined for the bermudan model".to_string(),
                ));
            }
            if *k < 1 || *l < 1 {
                return Err(CliError::Config(format!(
                    "hermite degrees must be at least 1, got k={k} l={l}"
                )));
            }
        }
        FamilySpec::Custom { path } => {
            if matches!(config.model, ModelSpec::Tree { .. }) {
                return Err(CliError::Config(
                    "custom increment families apply to simulated models".to_string(),
                ));
            }
            if !path.exists() {
                return Err(CliError::Config(format!(
                    "custom family file {} does not exist",
                    path.display()
                )));
            }
        }
        FamilySpec::SingleDoobScalar => {}
    }
    match &config.randomizer {
        RandomizerCfg::None => {}
        RandomizerCfg::Optimal { theta, .. } => {
            if !theta.is_finite() || *theta < 0.0 {
                return Err(CliError::Config(format!(
                    "the optimal randomizer scale must be finite and nonnegative, got {theta}"
                )));
            }
        }
        RandomizerCfg::Naive { theta, .. } => match theta {
            Some(values) => {
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(CliError::Config(
                        "naive randomizer scales must be finite".to_string(),
                    ));
                }
            }
            None => {
                if config.preset.is_none() {
                    return Err(CliError::Config(
                        "a naive randomizer needs explicit theta when no preset is set"
                            .to_string(),
                    ));
                }
            }
        },
    }
    Ok(())
}

impl ExperimentConfig {
    /// Instantiate the simulated market model; trees are loaded
    /// separately.
    pub fn market_model(&self) -> Result<Option<MarketModel>> {
        match &self.model {
            ModelSpec::Stylized => Ok(Some(MarketModel::Stylized(StylizedModel))),
            ModelSpec::Bermudan {
                s0,
                sigma2,
                kappa1,
                kappa2,
            } => {
                let model = BermudanCallModel::new(*s0, *sigma2, *kappa1, *kappa2)
                    .map_err(|e| CliError::Config(e.to_string()))?;
                Ok(Some(MarketModel::Bermudan(model)))
            }
            ModelSpec::Tree { .. } => Ok(None),
        }
    }

    /// The effective randomizer, with naive scales falling back to the
    /// preset table when omitted.
    pub fn randomizer_spec(&self) -> Result<RandomizerSpec> {
        match &self.randomizer {
            RandomizerCfg::None => Ok(RandomizerSpec::none()),
            RandomizerCfg::Optimal { theta, xi_law } => {
                Ok(RandomizerSpec::optimal(*theta).with_law(xi_law.to_core()))
            }
            RandomizerCfg::Naive { theta, xi_law } => {
                let values = match theta {
                    Some(values) => values.clone(),
                    None => {
                        let name = self.preset.as_deref().ok_or_else(|| {
                            CliError::Config(
                                "a naive randomizer needs explicit theta when no preset is set"
                                    .to_string(),
                            )
                        })?;
                        naive_theta_preset(name)?
                    }
                };
                Ok(RandomizerSpec::naive(values).with_law(xi_law.to_core()))
            }
        }
    }

    /// The xi law measured by sweep and randomizer commands.
    pub fn xi_law(&self) -> XiLaw {
        match &self.randomizer {
            RandomizerCfg::None => XiLaw::Uniform,
            RandomizerCfg::Optimal { xi_law, .. } | RandomizerCfg::Naive { xi_law, .. } => {
                xi_law.to_core()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resolve_json(text: &str, overrides: &Overrides) -> Result<ExperimentConfig> {
        let file: ConfigFile = serde_json::from_str(text).map_err(|e| {
            CliError::Config(format!("cannot parse config: {e}"))
        })?;
        resolve(file, overrides)
    }

    #[test]
    fn presets_expand_to_their_standard_parameters() {
        let ov = Overrides {
            seed: Some(7),
            ..Overrides::default()
        };
        let pa1 = resolve_json(r#"{"preset": "pa1"}"#, &ov).unwrap();
        assert_eq!(
            pa1.model,
            ModelSpec::Bermudan {
                s0: 2.0,
                sigma2: 0.04,
                kappa1: 2.0,
                kappa2: 2.5
            }
        );
        assert_eq!(pa1.family, FamilySpec::Msty);
        assert_eq!(pa1.n_paths, 2000);
        assert_eq!(pa1.n_test_paths, 100_000);
        assert_eq!(pa1.seed, 7);

        let pa2 = resolve_json(r#"{"preset": "pa2", "seed": 3}"#, &Overrides::default()).unwrap();
        match pa2.model {
            ModelSpec::Bermudan { sigma2, kappa2, .. } => {
                assert!((sigma2 - 1.0 / 3.0).abs() < 1e-15);
                assert_eq!(kappa2, 3.0);
            }
            other => panic!("unexpected model {other:?}"),
        }

        let sty = resolve_json(r#"{"preset": "stylized", "seed": 1}"#, &Overrides::default())
            .unwrap();
        assert_eq!(sty.model, ModelSpec::Stylized);
        assert_eq!(sty.family, FamilySpec::SingleDoobScalar);
        assert_eq!(naive_theta_preset("stylized").unwrap(), vec![0.16, 0.0, 0.0]);
        assert_eq!(naive_theta_preset("pa1").unwrap(), vec![1.6, 0.0, 0.0]);
        assert_eq!(naive_theta_preset("pa2").unwrap(), vec![4.8, 0.0, 0.0]);
    }

    #[test]
    fn explicit_fields_override_presets() {
        let cfg = resolve_json(
            r#"{"preset": "pa1", "family": {"kind": "hermite", "k": 3, "l": 3},
                "n_paths": 500, "seed": 11}"#,
            &Overrides::default(),
        )
        .unwrap();
        assert_eq!(cfg.family, FamilySpec::Hermite { k: 3, l: 3 });
        assert_eq!(cfg.n_paths, 500);

        let flag_wins = resolve_json(
            r#"{"preset": "pa1", "seed": 11}"#,
            &Overrides {
                preset: Some("pa2".to_string()),
                seed: Some(99),
                out: None,
            },
        )
        .unwrap();
        assert_eq!(flag_wins.preset.as_deref(), Some("pa2"));
        assert_eq!(flag_wins.seed, 99);
    }

    #[test]
    fn seed_and_model_are_required() {
        let err = resolve_json(r#"{"preset": "pa1"}"#, &Overrides::default()).unwrap_err();
        assert!(matches!(err, CliError::Config(_)));
        assert!(err.to_string().contains("seed"));

        let err = resolve_json(r#"{"seed": 1}"#, &Overrides::default()).unwrap_err();
        assert!(err.to_string().contains("model"));
    }

    #[test]
    fn validation_rejects_inconsistent_requests() {
        let err = resolve_json(
            r#"{"preset": "stylized", "family": {"kind": "msty"}, "seed": 1}"#,
            &Overrides::default(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("msty"));

        let err = resolve_json(
            r#"{"preset": "pa1", "family": {"kind": "hermite", "k": 0, "l": 3}, "seed": 1}"#,
            &Overrides::default(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("hermite"));

        let err = resolve_json(
            r#"{"preset": "pa1", "n_paths": 0, "seed": 1}"#,
            &Overrides::default(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("n_paths"));

        let err = resolve_json(
            r#"{"model": {"kind": "stylized"},
                "randomizer": {"kind": "naive", "theta": null}, "seed": 1}"#,
            &Overrides::default(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("naive"));

        let err = resolve_json(r#"{"preset": "pa3", "seed": 1}"#, &Overrides::default())
            .unwrap_err();
        assert!(err.to_string().contains("unknown preset"));

        assert!(resolve_json(r#"{"preset": "pa1", "sed": 1}"#, &Overrides::default()).is_err());
    }

    #[test]
    fn naive_scales_resolve_through_the_preset() {
        let cfg = resolve_json(
            r#"{"preset": "pa2", "randomizer": {"kind": "naive", "theta": null}, "seed": 5}"#,
            &Overrides::default(),
        )
        .unwrap();
        let spec = cfg.randomizer_spec().unwrap();
        match spec.kind {
            dualstop_core::randomize::RandomizerKind::Naive { ref theta } => {
                assert_eq!(theta, &vec![4.8, 0.0, 0.0]);
            }
            other => panic!("unexpected randomizer {other:?}"),
        }
    }
}
