//! Fixed-length statistical embedding used by the realism score and the
//! diversity analysis. Any [`Embedding`] implementation can be swapped in.

use std::sync::OnceLock;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::decompose::{decompose, DecompositionConfig};
use crate::data::{generate_synthetic, normalize, SyntheticSpec};

pub trait Embedding: Send + Sync {
    fn name(&self) -> &str;
    fn dim(&self) -> usize;
    fn embed(&self, x: &[f64]) -> Vec<f64>;
}

pub const ACF_LAGS: usize = 8;
pub const SPECTRAL_BINS: usize = 16;
pub const STAT_DIM: usize = 2 + ACF_LAGS + SPECTRAL_BINS;

/// Mean, std, autocorrelation at lags 1..=8 and 16 log-power bands.
pub fn stat_features(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut out = Vec::with_capacity(STAT_DIM);
    let mean = x.iter().sum::<f64>() / n.max(1) as f64;
    let dev: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let var = dev.iter().map(|d| d * d).sum::<f64>() / n.max(1) as f64;
    out.push(mean);
    out.push(var.sqrt());
    for lag in 1..=ACF_LAGS {
        let acf = if var > 0.0 && lag < n {
            dev.iter().zip(&dev[lag..]).map(|(a, b)| a * b).sum::<f64>() / (n as f64 * var)
        } else {
            0.0
        };
        out.push(acf);
    }
    let nf = n / 2;
    if nf == 0 {
        out.extend(std::iter::repeat_n(1e-8f64.ln(), SPECTRAL_BINS));
        return out;
    }
    let mut buf: Vec<Complex<f64>> = dev.iter().map(|&d| Complex::new(d, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let power: Vec<f64> = buf[1..=nf].iter().map(|c| c.norm_sqr() / n as f64).collect();
    for b in 0..SPECTRAL_BINS {
        let lo = (b * nf / SPECTRAL_BINS).min(nf - 1);
        let hi = ((b + 1) * nf / SPECTRAL_BINS).clamp(lo + 1, nf);
        let p = power[lo..hi].iter().sum::<f64>() / (hi - lo) as f64;
        out.push((p + 1e-8).ln());
    }
    out
}

/// [`stat_features`] z-scored with per-dimension constants.
#[derive(Clone, Debug, PartialEq)]
pub struct StatEmbedding {
    pub center: Vec<f64>,
    pub scale: Vec<f64>,
}

impl StatEmbedding {
    pub const NAME: &'static str = "stat26";

    /// Fits centering and scaling constants on `corpus`.
    pub fn fit(corpus: &[Vec<f64>]) -> Self {
        let feats: Vec<Vec<f64>> = corpus.iter().map(|x| stat_features(x)).collect();
        let n = feats.len().max(1) as f64;
        let center: Vec<f64> = (0..STAT_DIM).map(|d| feats.iter().map(|f| f[d]).sum::<f64>() / n).collect();
        let scale = (0..STAT_DIM)
            .map(|d| {
                let var = feats.iter().map(|f| (f[d] - center[d]).powi(2)).sum::<f64>() / n;
                if var.sqrt() > 1e-12 {
                    var.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        Self { center, scale }
    }

    /// Constants fit once on the content and style components of a fixed
    /// synthetic corpus (256 windows of length 128, seed 0x5eed).
    pub fn reference() -> &'static StatEmbedding {
        static REF: OnceLock<StatEmbedding> = OnceLock::new();
        REF.get_or_init(|| {
            let spec = SyntheticSpec { count: 256, len: 128, seed: 0x5eed, ..Default::default() };
            let ds = generate_synthetic(&spec).expect("reference corpus spec is valid");
            let cfg = DecompositionConfig::default();
            let mut corpus = Vec::with_capacity(2 * ds.len());
            for r in &ds.records {
                let (z, _) = normalize(&r.values);
                let (c, s) = decompose(&z, &cfg).expect("reference windows exceed kernel width");
                corpus.push(c);
                corpus.push(s);
            }
            StatEmbedding::fit(&corpus)
        })
    }
}

impl Embedding for StatEmbedding {
    fn name(&self) -> &str {
        Self::NAME
    }

    fn dim(&self) -> usize {
        STAT_DIM
    }

    fn embed(&self, x: &[f64]) -> Vec<f64> {
        stat_features(x).iter().zip(&self.center).zip(&self.scale).map(|((f, c), s)| (f - c) / s).collect()
    }
}
