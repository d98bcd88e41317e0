//! Content/style decomposition, the CP/SI/RM scores and diversity analysis.
//!
//! Scores expect z-normalized inputs of equal length. [`evaluate`]
//! normalizes for the caller; the bare functions only check in debug builds.

mod decompose;
mod embedding;
mod pca;
mod report;

pub use decompose::{decompose, moving_average, DecompositionConfig};
pub use embedding::{stat_features, Embedding, StatEmbedding, ACF_LAGS, SPECTRAL_BINS, STAT_DIM};
pub use pca::{pca_spread, pca_spread_vectors, PcaSpread};
pub use report::{evaluate, Aggregate, EvalReport, PairScore};

use crate::error::{Error, Result};

fn debug_check_normalized(x: &[f64]) {
    if cfg!(debug_assertions) {
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let std = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        debug_assert!(
            mean.abs() < 1e-6 && ((std - 1.0).abs() < 1e-3 || std < 1e-6),
            "metric input is not z-normalized (mean {mean}, std {std})"
        );
    }
}

fn check_pair(op: &'static str, x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::shape(op, format!("lengths {} and {} differ", x.len(), y.len())));
    }
    debug_check_normalized(x);
    debug_check_normalized(y);
    Ok(())
}

pub fn mse(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / x.len().max(1) as f64
}

/// Content preservation: MSE between content components.
pub fn cp(xhat: &[f64], a: &[f64], cfg: &DecompositionConfig) -> Result<f64> {
    check_pair("cp", xhat, a)?;
    Ok(mse(&decompose(xhat, cfg)?.0, &decompose(a, cfg)?.0))
}

/// Style integration: MSE between style components.
pub fn si(xhat: &[f64], b: &[f64], cfg: &DecompositionConfig) -> Result<f64> {
    check_pair("si", xhat, b)?;
    Ok(mse(&decompose(xhat, cfg)?.1, &decompose(b, cfg)?.1))
}

/// Realism: mean of the embedding MSEs of the content components (against
/// `a`) and style components (against `b`).
pub fn rm(xhat: &[f64], a: &[f64], b: &[f64], emb: &dyn Embedding, cfg: &DecompositionConfig) -> Result<f64> {
    check_pair("rm", xhat, a)?;
    check_pair("rm", xhat, b)?;
    let (cx, sx) = decompose(xhat, cfg)?;
    let (ca, _) = decompose(a, cfg)?;
    let (_, sb) = decompose(b, cfg)?;
    Ok(0.5 * (mse(&emb.embed(&cx), &emb.embed(&ca)) + mse(&emb.embed(&sx), &emb.embed(&sb))))
}
