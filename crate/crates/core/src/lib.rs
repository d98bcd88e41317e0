//! Diffusion-based time-series style transfer.
//!
//! A content encoder (learnable low-pass) and a style encoder (zero-DC,
//! linear-phase high-pass) condition a patchified transformer denoiser
//! through two cross-attention streams. Training drops each condition at
//! random so that sampling can mix unconditional, content-only and
//! style-only noise estimates with independent guidance scales.

pub mod baselines;
pub mod config;
pub mod data;
pub mod denoiser;
pub mod diffusion;
pub mod encoders;
pub mod error;
pub mod experiments;
pub mod layers;
pub mod metrics;
pub mod model;
pub mod numerics;

pub use error::{Error, Result};
pub use model::{Model, ModelConfig};
