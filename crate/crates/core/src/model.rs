use serde::{Deserialize, Serialize};

use crate::denoiser::{Denoiser, DenoiserConfig, DenoiserInput};
use crate::encoders::{ContentConfig, Encoder, EncoderKind, StyleConfig};
use crate::error::Result;
use crate::numerics::{ParamStore, Real, Rng};

/// Architecture of the full style-transfer network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub denoiser: DenoiserConfig,
    pub content: ContentConfig,
    pub style: StyleConfig,
    #[serde(default)]
    pub content_kind: EncoderKind,
    #[serde(default)]
    pub style_kind: EncoderKind,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            denoiser: DenoiserConfig::default(),
            content: ContentConfig::default(),
            style: StyleConfig::default(),
            content_kind: EncoderKind::Specialized,
            style_kind: EncoderKind::Specialized,
        }
    }
}

impl ModelConfig {
    /// Single-core desk preset used by the toy experiments.
    pub fn desk() -> Self {
        Self {
            denoiser: DenoiserConfig { hidden: 64, heads: 4, layers: 2, patch: 8, mlp_ratio: 4, p_c: 0.10, p_s: 0.15 },
            content: ContentConfig { ds: 8, channels: 32, blocks: 3, kernel: 5 },
            style: StyleConfig::default(),
            content_kind: EncoderKind::Specialized,
            style_kind: EncoderKind::Specialized,
        }
    }

    /// Smallest configuration used for gradient verification.
    pub fn tiny() -> Self {
        Self {
            denoiser: DenoiserConfig { hidden: 16, heads: 2, layers: 1, patch: 4, mlp_ratio: 2, p_c: 0.10, p_s: 0.15 },
            content: ContentConfig { ds: 8, channels: 4, blocks: 1, kernel: 5 },
            style: StyleConfig { hidden: 4, depth: 2, kernel: 3 },
            content_kind: EncoderKind::Specialized,
            style_kind: EncoderKind::Specialized,
        }
    }
}

/// Encoders, denoiser and their parameters.
#[derive(Clone, Debug)]
pub struct Model<T> {
    pub config: ModelConfig,
    pub params: ParamStore<T>,
    pub content: Encoder,
    pub style: Encoder,
    pub denoiser: Denoiser,
}

impl<T: Real> Model<T> {
    /// Fresh weights drawn from `seed`.
    pub fn new(config: &ModelConfig, seed: u64) -> Result<Self> {
        let mut rng = Rng::new(seed);
        let mut params = ParamStore::new();
        let content = Encoder::content(&mut params, config.content_kind, &config.content, &config.style, &mut rng);
        let style = Encoder::style(&mut params, config.style_kind, &config.style, &mut rng);
        let denoiser = Denoiser::new(&mut params, &config.denoiser, &mut rng)?;
        Ok(Self { config: config.clone(), params, content, style, denoiser })
    }

    /// Same architecture with `params` swapped in (layout must match).
    pub fn with_params<U: Real>(&self, params: ParamStore<U>) -> Result<Model<U>> {
        self.params.check_layout(&params)?;
        Ok(Model {
            config: self.config.clone(),
            params,
            content: self.content.clone(),
            style: self.style.clone(),
            denoiser: self.denoiser.clone(),
        })
    }

    pub fn encode_content(&self, x: &[T]) -> Result<Vec<T>> {
        self.content.encode(&self.params, x)
    }

    pub fn encode_style(&self, x: &[T]) -> Result<Vec<T>> {
        self.style.encode(&self.params, x)
    }

    /// Noise estimate for one noisy series.
    pub fn predict_noise(&self, x_t: &[T], t: usize, content: Option<&[T]>, style: Option<&[T]>) -> Result<Vec<T>> {
        let mut out = self.denoiser.predict(&self.params, &[DenoiserInput { x_t, t, content, style }])?;
        Ok(out.remove(0))
    }

    pub fn predict_batch(&self, items: &[DenoiserInput<T>]) -> Result<Vec<Vec<T>>> {
        self.denoiser.predict(&self.params, items)
    }

    /// Re-applies encoder kernel constraints.
    pub fn project_constraints(&mut self) {
        self.content.project(&mut self.params);
        self.style.project(&mut self.params);
    }

    pub fn patch(&self) -> usize {
        self.config.denoiser.patch
    }
}
