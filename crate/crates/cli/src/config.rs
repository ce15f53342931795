use std::fmt;
use std::path::{Path, PathBuf};

use rkf_core::tracking::{preset, ScenarioConfig, PRESET_NAMES};
use serde::Deserialize;

fn yes() -> bool {
    true
}

/// A `track` experiment: one scenario, optionally swept over the noise
/// shape parameter.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: ScenarioConfig,
    /// Noise shape values (`alpha`, `v` or `U`) to run the scenario at.
    #[serde(default)]
    pub sweep: Option<Vec<f64>>,
    /// Output directory; `--out` takes precedence.
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default = "yes")]
    pub plots: bool,
    /// 300 steps and 100 runs instead of the scenario's counts.
    #[serde(default)]
    pub paper_scale: bool,
}

pub const PAPER_STEPS: usize = 300;
pub const PAPER_RUNS: usize = 100;

#[derive(Debug)]
pub enum ConfigError {
    Io(PathBuf, std::io::Error),
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    UnknownPreset(String),
    Invalid(String),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io(path, e) => write!(f, "cannot read {}: {e}", path.display()),
            ConfigError::Parse {
                path,
                line,
                column,
                message,
            } => write!(f, "{}:{line}:{column}: {message}", path.display()),
            ConfigError::UnknownPreset(name) => {
                write!(f, "unknown preset `{name}`; available presets: {}", PRESET_NAMES.join(", "))
            }
            ConfigError::Invalid(msg) => write!(f, "invalid configuration: {msg}"),
        }
    }
}

impl std::error::Error for ConfigError {}

impl ExperimentConfig {
    pub fn from_preset(name: &str) -> Result<Self, ConfigError> {
        let (scenario, sweep) = preset(name).ok_or_else(|| ConfigError::UnknownPreset(name.to_string()))?;
        Ok(ExperimentConfig {
            scenario,
            sweep,
            out: None,
            plots: true,
            paper_scale: false,
        })
    }

    pub fn from_json(path: &Path, text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(path.to_path_buf(), e))?;
        Self::from_json(path, &text)
    }

    /// Scenarios to run, paired with the noise shape each one uses.
    pub fn scenarios(&self) -> Result<Vec<(f64, ScenarioConfig)>, ConfigError> {
        let mut base = self.scenario.clone();
        if self.paper_scale {
            base.steps = PAPER_STEPS;
            base.mc_runs = PAPER_RUNS;
        }
        let shapes = match &self.sweep {
            Some(values) if values.is_empty() => return Err(ConfigError::Invalid("sweep is empty".into())),
            Some(values) => values.clone(),
            None => vec![base.noise.shape()],
        };
        shapes
            .into_iter()
            .map(|shape| {
                let mut cfg = base.clone();
                cfg.noise = cfg.noise.with_shape(shape);
                cfg.validate()
                    .map_err(|e| ConfigError::Invalid(format!("{} = {shape}: {e}", cfg.noise.name())))?;
                Ok((shape, cfg))
            })
            .collect()
    }

    pub fn is_sweep(&self) -> bool {
        self.sweep.is_some()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_error_has_position() {
        let text = "{\n  \"scenario\": {\n    \"noise\": {\"family\": \"sgas\", \"alpha\": 0.5},\n    \"filters\": [,]\n  }\n}";
        match ExperimentConfig::from_json(Path::new("c.json"), text) {
            Err(ConfigError::Parse { line, column, .. }) => {
                assert_eq!(line, 4);
                assert!(column > 0);
            }
            other => panic!("expected a parse error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_filter_lists_valid_names() {
        let text = r#"{"scenario": {"noise": {"family": "sgas", "alpha": 0.5}, "filters": [{"kind": "ukf"}]}}"#;
        let err = ExperimentConfig::from_json(Path::new("c.json"), text).unwrap_err().to_string();
        assert!(err.contains("ukf") && err.contains("rkf-sgas-gsis") && err.contains("rstkf"), "{err}");
    }

    #[test]
    fn paper_scale_and_sweep() {
        let mut cfg = ExperimentConfig::from_preset("gm-sweep").unwrap();
        cfg.paper_scale = true;
        let scenarios = cfg.scenarios().unwrap();
        assert_eq!(scenarios.len(), 9);
        assert!(scenarios.iter().all(|(_, s)| s.steps == 300 && s.mc_runs == 100));
        assert_eq!(scenarios[4].0, 1e4);
        assert_eq!(scenarios[4].1.noise.shape(), 1e4);
    }

    #[test]
    fn invalid_sweep_value_is_reported() {
        let mut cfg = ExperimentConfig::from_preset("sgas-sweep").unwrap();
        cfg.sweep = Some(vec![0.5, 2.5]);
        let err = cfg.scenarios().unwrap_err().to_string();
        assert!(err.contains("2.5"), "{err}");
        assert!(ExperimentConfig::from_preset("nope").is_err());
    }
}
