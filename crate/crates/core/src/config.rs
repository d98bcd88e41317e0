//! Run configuration: one TOML file covering data, architecture, training
//! and sampling. Unknown keys are rejected at every level.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::SyntheticSpec;
use crate::diffusion::{GuidanceConfig, TrainConfig};
use crate::error::{Error, Result};
use crate::model::ModelConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Directory for checkpoints, logs and generated files.
    pub output_dir: PathBuf,
    /// Training dataset; a synthetic corpus from `synthetic` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<PathBuf>,
    pub synthetic: SyntheticSpec,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub guidance: GuidanceConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::desk()
    }
}

impl RunConfig {
    /// Single-core preset: reduced width, batch 32, 5k iterations.
    pub fn desk() -> Self {
        Self {
            output_dir: PathBuf::from("runs/desk"),
            dataset: None,
            synthetic: SyntheticSpec::default(),
            model: ModelConfig::desk(),
            train: TrainConfig::default(),
            guidance: GuidanceConfig::default(),
        }
    }

    /// Full-width architecture, batch 256, 200k iterations.
    pub fn full() -> Self {
        Self {
            output_dir: PathBuf::from("runs/full"),
            model: ModelConfig::default(),
            train: TrainConfig { iterations: 200_000, batch: 256, ..TrainConfig::default() },
            ..Self::desk()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.denoiser.validate()?;
        self.train.validate()?;
        self.guidance.validate()?;
        if self.synthetic.len < self.train.window && self.dataset.is_none() {
            return Err(Error::Config(format!(
                "synthetic series length {} is shorter than the training window {}",
                self.synthetic.len, self.train.window
            )));
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("run config serializes")
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}
