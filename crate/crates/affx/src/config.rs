//! The run configuration document (TOML). Unknown keys are rejected everywhere.

use std::path::{Path, PathBuf};

use affx_core::experiment::ExperimentConfig;
use affx_core::task::ClassifierConfig;
use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Run directory written by `run` and read by `report`.
    pub output_dir: PathBuf,
    /// Corpus cache; falls back to `$AFFX_DATA_DIR`, then `./data`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data_dir: Option<PathBuf>,
    /// Pretrained classifier weights.
    #[serde(default = "default_model_path")]
    pub model_path: PathBuf,
    /// Predictions of the frozen classifier over the experiment half.
    #[serde(default = "default_cache_path")]
    pub cache_path: PathBuf,
    /// Seed of the train-corpus halving.
    #[serde(default = "default_split_seed")]
    pub split_seed: u64,
    /// Minimum test accuracy before the classifier may be used.
    #[serde(default = "default_gate")]
    pub confidence_gate: f64,
    #[serde(default)]
    pub classifier: ClassifierConfig,
    pub experiment: ExperimentConfig,
}

fn default_model_path() -> PathBuf {
    PathBuf::from("artifacts/classifier.json")
}

fn default_cache_path() -> PathBuf {
    PathBuf::from("artifacts/predictions.csv")
}

fn default_split_seed() -> u64 {
    7
}

fn default_gate() -> f64 {
    0.97
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.confidence_gate) {
            bail!("confidence_gate must be in [0, 1]");
        }
        self.classifier.validate()?;
        self.experiment.validate()?;
        Ok(())
    }
}
