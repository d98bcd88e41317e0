//! Ablation harnesses: guidance grid, temperature diversity, length
//! extrapolation and encoder replacement.

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::data::{generate_series, normalize, Dataset, Family, FamilyParams, WindowSampler, WindowSpec};
use crate::diffusion::{sample_batch, GuidanceConfig, NoiseSchedule, Pair, Trainer};
use crate::encoders::EncoderKind;
use crate::error::{Error, Result};
use crate::metrics::{evaluate, pca_spread_vectors, DecompositionConfig, Embedding, EvalReport};
use crate::model::Model;
use crate::numerics::Rng;

/// `(s_c, s_s)` rows of the guidance ablation, in table order.
pub const GUIDANCE_GRID: [(f64, f64); 10] = [
    (1.00, 0.25),
    (0.25, 1.00),
    (0.25, 0.25),
    (0.50, 0.50),
    (0.75, 0.75),
    (1.00, 1.00),
    (1.25, 1.25),
    (1.50, 1.50),
    (1.75, 1.75),
    (2.00, 2.00),
];

pub const TEMPERATURES: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

pub const LENGTHS: [usize; 5] = [128, 256, 512, 1024, 2048];

/// A content/style pair whose members share neither family: `a` and `b`
/// differ in both their slow and their textured component.
#[derive(Clone, Debug, PartialEq)]
pub struct TransferPair {
    pub content: Vec<f64>,
    pub style: Vec<f64>,
    pub families: [Family; 4],
}

/// Held-out pairs, z-normalized. The content series mixes slow family `A`
/// with texture `X`; the style series mixes slow `B ≠ A` with texture
/// `Y ≠ X`.
pub fn transfer_pairs(count: usize, len: usize, seed: u64, params: &FamilyParams) -> Vec<TransferPair> {
    let slow = [Family::TrendSine, Family::PiecewiseLevel];
    let texture = [Family::Ar1, Family::SineBurst];
    let mut rng = Rng::new(seed);
    (0..count)
        .map(|i| {
            let (ca, cb) = (slow[i % 2], slow[(i + 1) % 2]);
            let (ta, tb) = (texture[(i / 2) % 2], texture[(i / 2 + 1) % 2]);
            let mut mix = |c: Family, t: Family| -> Vec<f64> {
                let x = generate_series(c, params, len, &mut rng);
                let y = generate_series(t, params, len, &mut rng);
                normalize(&x.iter().zip(&y).map(|(a, b)| a + b).collect::<Vec<_>>()).0
            };
            let content = mix(ca, ta);
            let style = mix(cb, tb);
            TransferPair { content, style, families: [ca, ta, cb, tb] }
        })
        .collect()
}

/// Samples one output per pair (seed `seed + i` for pair `i`).
pub fn transfer(
    model: &Model<f32>,
    pairs: &[TransferPair],
    schedule: &NoiseSchedule,
    guidance: &GuidanceConfig,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let a: Vec<Vec<f32>> = pairs.iter().map(|p| p.content.iter().map(|&v| v as f32).collect()).collect();
    let b: Vec<Vec<f32>> = pairs.iter().map(|p| p.style.iter().map(|&v| v as f32).collect()).collect();
    let batch: Vec<Pair<f32>> = a.iter().zip(&b).map(|(a, b)| Pair { content: a, style: b }).collect();
    let seeds: Vec<u64> = (0..pairs.len() as u64).map(|i| seed.wrapping_add(i)).collect();
    let out = sample_batch(model, &batch, schedule, guidance, &seeds)?;
    Ok(out.into_iter().map(|x| x.iter().map(|&v| v as f64).collect()).collect())
}

/// Scores outputs against their pairs.
pub fn score(
    outputs: &[Vec<f64>],
    pairs: &[TransferPair],
    embedding: &dyn Embedding,
) -> Result<EvalReport> {
    let triples: Vec<(&[f64], &[f64], &[f64])> = outputs
        .iter()
        .zip(pairs)
        .map(|(x, p)| (x.as_slice(), p.content.as_slice(), p.style.as_slice()))
        .collect();
    evaluate(&triples, embedding, &DecompositionConfig::default())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GuidanceRow {
    pub content_scale: f64,
    pub style_scale: f64,
    pub report: EvalReport,
}

pub fn guidance_sweep(
    model: &Model<f32>,
    pairs: &[TransferPair],
    schedule: &NoiseSchedule,
    grid: &[(f64, f64)],
    temperature: f64,
    seed: u64,
    embedding: &dyn Embedding,
    mut progress: impl FnMut(usize, usize),
) -> Result<Vec<GuidanceRow>> {
    let mut rows = Vec::with_capacity(grid.len());
    for (i, &(sc, ss)) in grid.iter().enumerate() {
        let out = transfer(model, pairs, schedule, &GuidanceConfig::new(sc, ss, temperature), seed)?;
        rows.push(GuidanceRow { content_scale: sc, style_scale: ss, report: score(&out, pairs, embedding)? });
        progress(i + 1, grid.len());
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemperatureRow {
    pub temperature: f64,
    /// Spread of this temperature's repeats in their own 2-D PCA.
    pub dispersion: f64,
    /// Coordinates in the PCA shared by all temperatures.
    pub points: Vec<[f64; 2]>,
    pub samples: Vec<Vec<f64>>,
}

/// `repeats` samples of one pair per temperature; repeat `r` uses seed
/// `seed + r` at every temperature.
pub fn temperature_sweep(
    model: &Model<f32>,
    pair: &TransferPair,
    schedule: &NoiseSchedule,
    temperatures: &[f64],
    repeats: usize,
    seed: u64,
    embedding: &dyn Embedding,
) -> Result<Vec<TemperatureRow>> {
    if repeats < 3 {
        return Err(Error::Config(format!("temperature sweep needs at least 3 repeats, got {repeats}")));
    }
    let a: Vec<f32> = pair.content.iter().map(|&v| v as f32).collect();
    let b: Vec<f32> = pair.style.iter().map(|&v| v as f32).collect();
    let batch = vec![Pair { content: &a, style: &b }; repeats];
    let seeds: Vec<u64> = (0..repeats as u64).map(|r| seed.wrapping_add(r)).collect();
    let mut rows = Vec::with_capacity(temperatures.len());
    let mut all = Vec::new();
    for &lambda in temperatures {
        let out = sample_batch(model, &batch, schedule, &GuidanceConfig::new(1.0, 1.0, lambda), &seeds)?;
        let samples: Vec<Vec<f64>> = out.into_iter().map(|x| x.iter().map(|&v| v as f64).collect()).collect();
        let vectors: Vec<Vec<f64>> = samples.iter().map(|s| embedding.embed(s)).collect();
        let dispersion = pca_spread_vectors(&vectors)?.dispersion;
        all.extend(vectors);
        rows.push(TemperatureRow { temperature: lambda, dispersion, points: vec![], samples });
    }
    let joint = pca_spread_vectors(&all)?;
    for (row, pts) in rows.iter_mut().zip(joint.points.chunks(repeats)) {
        row.points = pts.to_vec();
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LengthRow {
    pub len: usize,
    pub report: EvalReport,
}

/// Fresh pairs at each length, sampled with the given guidance. Pairs keep
/// the time scale of a training corpus of `base_len`-long series, so longer
/// pairs hold proportionally more cycles, segments and bursts.
pub fn length_sweep(
    model: &Model<f32>,
    schedule: &NoiseSchedule,
    lengths: &[usize],
    base_len: usize,
    pairs_per_length: usize,
    guidance: &GuidanceConfig,
    seed: u64,
    embedding: &dyn Embedding,
    mut progress: impl FnMut(usize),
) -> Result<Vec<LengthRow>> {
    let mut rows = Vec::with_capacity(lengths.len());
    for &len in lengths {
        let params = FamilyParams::default().extended(len as f64 / base_len as f64);
        let pairs = transfer_pairs(pairs_per_length, len, seed, &params);
        let out = transfer(model, &pairs, schedule, guidance, seed)?;
        rows.push(LengthRow { len, report: score(&out, &pairs, embedding)? });
        progress(len);
    }
    Ok(rows)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncoderVariant {
    Full,
    StylePlain,
    BothPlain,
}

impl EncoderVariant {
    pub const ALL: [EncoderVariant; 3] = [EncoderVariant::Full, EncoderVariant::StylePlain, EncoderVariant::BothPlain];

    pub fn kinds(self) -> (EncoderKind, EncoderKind) {
        match self {
            EncoderVariant::Full => (EncoderKind::Specialized, EncoderKind::Specialized),
            EncoderVariant::StylePlain => (EncoderKind::Specialized, EncoderKind::PlainConv),
            EncoderVariant::BothPlain => (EncoderKind::PlainConv, EncoderKind::PlainConv),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            EncoderVariant::Full => "content+style specialized",
            EncoderVariant::StylePlain => "style -> plain conv k=3",
            EncoderVariant::BothPlain => "both -> plain conv k=3",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncoderRow {
    pub variant: EncoderVariant,
    pub final_loss: f64,
    pub report: EvalReport,
}

/// Trains each encoder variant with the same data, seed and budget, then
/// scores it on the same pairs.
pub fn encoder_ablation(
    base: &RunConfig,
    dataset: &Dataset,
    pairs: &[TransferPair],
    seed: u64,
    embedding: &dyn Embedding,
    mut progress: impl FnMut(EncoderVariant, u64, f64),
) -> Result<Vec<EncoderRow>> {
    let windows = WindowSampler::new(dataset, WindowSpec { len: base.train.window })?;
    let mut rows = Vec::with_capacity(3);
    for variant in EncoderVariant::ALL {
        let mut model = base.model.clone();
        (model.content_kind, model.style_kind) = variant.kinds();
        let mut trainer = Trainer::new(&model, base.train.clone())?;
        let losses = trainer.run(&windows, None, None, |i, l| progress(variant, i, l))?;
        let tail = &losses[losses.len() - (losses.len() / 10).max(1)..];
        let final_loss = tail.iter().map(|x| x.1).sum::<f64>() / tail.len() as f64;
        let out = transfer(&trainer.model, pairs, &trainer.schedule, &base.guidance, seed)?;
        rows.push(EncoderRow { variant, final_loss, report: score(&out, pairs, embedding)? });
    }
    Ok(rows)
}
