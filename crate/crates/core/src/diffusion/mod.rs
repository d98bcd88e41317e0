//! Noise schedule, training objective and step, and guided sampling.

mod objective;
mod optimizer;
mod sampler;
mod schedule;
mod trainer;

pub use objective::{batch_loss, batch_loss_and_grad, TrainItem};
pub use optimizer::{AdamW, AdamWConfig};
pub use sampler::{combine_guidance, sample, sample_batch, sample_unconditional, GuidanceConfig, Pair};
pub use schedule::{forward_noise, NoiseSchedule};
pub use trainer::{train_step, TrainConfig, Trainer};
