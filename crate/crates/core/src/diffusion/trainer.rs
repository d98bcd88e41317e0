//! Training loop: window sampling, the per-step update, logging and
//! checkpoint cadence.
//!
//! Step `i` (1-based) draws everything from `Rng::derive(seed, i)`, so a run
//! resumed from a checkpoint at iteration `k` replays steps `k+1..` exactly.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::objective::{batch_loss_and_grad, TrainItem};
use super::optimizer::{AdamW, AdamWConfig};
use super::schedule::NoiseSchedule;
use crate::data::{save_checkpoint, Checkpoint, LossLog, WindowSampler};
use crate::error::{Error, Result};
use crate::model::{Model, ModelConfig};
use crate::numerics::{Real, Rng};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub iterations: u64,
    pub batch: usize,
    pub window: usize,
    pub diffusion_steps: usize,
    pub seed: u64,
    pub log_every: u64,
    pub checkpoint_every: u64,
    #[serde(default)]
    pub optimizer: AdamWConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            iterations: 5000,
            batch: 32,
            window: 128,
            diffusion_steps: 500,
            seed: 0,
            log_every: 10,
            checkpoint_every: 500,
            optimizer: AdamWConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch == 0 {
            return Err(Error::Config("batch must be >= 1".into()));
        }
        if self.window < 8 {
            return Err(Error::Config(format!("window must be >= 8, got {}", self.window)));
        }
        if self.diffusion_steps == 0 {
            return Err(Error::Config("diffusion_steps must be >= 1".into()));
        }
        if self.log_every == 0 || self.checkpoint_every == 0 {
            return Err(Error::Config("log_every and checkpoint_every must be >= 1".into()));
        }
        Ok(())
    }
}

/// One optimizer step on a batch of clean normalized windows. Draws, per
/// item and in order: `t`, the noise, the content drop and the style drop.
pub fn train_step<T: Real>(
    model: &mut Model<T>,
    optimizer: &mut AdamW<T>,
    schedule: &NoiseSchedule,
    x0: &[Vec<T>],
    rng: &mut Rng,
) -> Result<f64> {
    let (p_c, p_s) = (model.config.denoiser.p_c, model.config.denoiser.p_s);
    let items: Vec<TrainItem<T>> = x0
        .iter()
        .map(|x| {
            let t = 1 + rng.below(schedule.steps() as u64) as usize;
            let eps = rng.normal_vec(x.len());
            let keep_content = !rng.bernoulli(p_c);
            let keep_style = !rng.bernoulli(p_s);
            TrainItem { x0: x.clone(), t, eps, keep_content, keep_style }
        })
        .collect();
    let mut grads = model.params.zeros_like();
    let loss = batch_loss_and_grad(model, schedule, &items, &mut grads)?.as_f64();
    if !loss.is_finite() {
        let ts: Vec<usize> = items.iter().map(|i| i.t).collect();
        return Err(Error::Divergence(format!("loss is {loss} (steps {ts:?})")));
    }
    if let Some(id) = grads.ids().find(|&id| grads.data(id).iter().any(|g| !g.is_finite())) {
        return Err(Error::Divergence(format!("non-finite gradient in `{}` at loss {loss}", grads.name(id))));
    }
    optimizer.update(&mut model.params, &grads);
    model.project_constraints();
    Ok(loss)
}

/// Model, optimizer and progress of one training run.
#[derive(Clone, Debug)]
pub struct Trainer {
    pub model: Model<f32>,
    pub optimizer: AdamW<f32>,
    pub schedule: NoiseSchedule,
    pub config: TrainConfig,
    pub iteration: u64,
}

impl Trainer {
    /// Fresh weights seeded from `config.seed`.
    pub fn new(model_config: &ModelConfig, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let model = Model::new(model_config, config.seed)?;
        let optimizer = AdamW::new(config.optimizer.clone(), &model.params);
        let schedule = NoiseSchedule::default_linear(config.diffusion_steps)?;
        Ok(Self { model, optimizer, schedule, config, iteration: 0 })
    }

    /// Continues from a saved state; the layout must match `model_config`.
    pub fn from_checkpoint(model_config: &ModelConfig, config: TrainConfig, ckpt: Checkpoint) -> Result<Self> {
        let mut t = Self::new(model_config, config)?;
        t.model.params.check_layout(&ckpt.params)?;
        t.model.params = ckpt.params;
        t.optimizer.m = ckpt.m;
        t.optimizer.v = ckpt.v;
        t.optimizer.step = ckpt.iteration;
        t.iteration = ckpt.iteration;
        Ok(t)
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            iteration: self.iteration,
            params: self.model.params.clone(),
            m: self.optimizer.m.clone(),
            v: self.optimizer.v.clone(),
        }
    }

    pub fn step(&mut self, windows: &WindowSampler) -> Result<f64> {
        let next = self.iteration + 1;
        let mut rng = Rng::derive(self.config.seed, next);
        let x0: Vec<Vec<f32>> = (0..self.config.batch)
            .map(|_| windows.draw(&mut rng).0.iter().map(|&v| v as f32).collect())
            .collect();
        let loss = train_step(&mut self.model, &mut self.optimizer, &self.schedule, &x0, &mut rng)
            .map_err(|e| match e {
                Error::Divergence(msg) => Error::Divergence(format!("iteration {next}: {msg}")),
                other => other,
            })?;
        self.iteration = next;
        Ok(loss)
    }

    /// Steps until `config.iterations`, logging every `log_every` steps and
    /// checkpointing every `checkpoint_every` steps and at the end.
    pub fn run(
        &mut self,
        windows: &WindowSampler,
        mut log: Option<&mut LossLog>,
        checkpoint: Option<&Path>,
        mut progress: impl FnMut(u64, f64),
    ) -> Result<Vec<(u64, f64)>> {
        if windows.spec().len != self.config.window {
            return Err(Error::Config(format!(
                "window sampler length {} differs from configured window {}",
                windows.spec().len,
                self.config.window
            )));
        }
        let mut losses = Vec::new();
        while self.iteration < self.config.iterations {
            let loss = self.step(windows)?;
            losses.push((self.iteration, loss));
            if self.iteration % self.config.log_every == 0 {
                if let Some(log) = log.as_deref_mut() {
                    log.append(self.iteration, loss)?;
                }
                progress(self.iteration, loss);
            }
            if let Some(path) = checkpoint {
                if self.iteration % self.config.checkpoint_every == 0 {
                    save_checkpoint(path, &self.checkpoint())?;
                }
            }
        }
        if let Some(path) = checkpoint {
            save_checkpoint(path, &self.checkpoint())?;
        }
        Ok(losses)
    }
}
