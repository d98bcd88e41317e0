//! Guided ancestral sampling.
//!
//! Each reverse step evaluates the unconditional, content-only and
//! style-only noise estimates in one stacked batch and combines them as
//! `ε̂ = ε_u + s_c·(ε_c − ε_u) + s_s·(ε_s − ε_u)`. The update is the DDPM
//! posterior mean plus `λ·σ_t·z`, with `z = 0` on the final step.

use serde::{Deserialize, Serialize};

use crate::data::{denormalize, normalize, NormStats};
use crate::denoiser::DenoiserInput;
use crate::diffusion::schedule::NoiseSchedule;
use crate::error::{Error, Result};
use crate::model::Model;
use crate::numerics::{Real, Rng};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GuidanceConfig {
    /// Content guidance scale `s_c`.
    pub content_scale: f64,
    /// Style guidance scale `s_s`.
    pub style_scale: f64,
    /// Temperature `λ` on the injected noise.
    pub temperature: f64,
    /// Clamp the implied clean estimate to `[−c, c]` before each update.
    #[serde(default)]
    pub clip_x0: Option<f64>,
}

impl Default for GuidanceConfig {
    fn default() -> Self {
        Self { content_scale: 1.0, style_scale: 1.0, temperature: 1.0, clip_x0: None }
    }
}

impl GuidanceConfig {
    pub fn new(content_scale: f64, style_scale: f64, temperature: f64) -> Self {
        Self { content_scale, style_scale, temperature, clip_x0: None }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.content_scale.is_finite() && self.style_scale.is_finite() && self.temperature.is_finite()) {
            return Err(Error::invalid("guidance", "scales and temperature must be finite"));
        }
        if self.temperature < 0.0 {
            return Err(Error::invalid("guidance", format!("temperature must be >= 0, got {}", self.temperature)));
        }
        if let Some(c) = self.clip_x0 {
            if !(c > 0.0) {
                return Err(Error::invalid("guidance", "clip_x0 must be positive"));
            }
        }
        Ok(())
    }
}

/// `ε_u + s_c·(ε_c − ε_u) + s_s·(ε_s − ε_u)`, elementwise.
pub fn combine_guidance<T: Real>(eps_u: &[T], eps_c: &[T], eps_s: &[T], s_c: f64, s_s: f64) -> Vec<T> {
    let (sc, ss) = (T::lit(s_c), T::lit(s_s));
    eps_u
        .iter()
        .zip(eps_c)
        .zip(eps_s)
        .map(|((&u, &c), &s)| u + sc * (c - u) + ss * (s - u))
        .collect()
}

/// A content/style pair in raw (un-normalized) units.
#[derive(Clone, Copy, Debug)]
pub struct Pair<'a, T> {
    pub content: &'a [T],
    pub style: &'a [T],
}

struct Chain<T> {
    x: Vec<T>,
    rng: Rng,
    content: Option<Vec<T>>,
    style: Option<Vec<T>>,
}

/// Runs `T` reverse steps for every chain in lock-step. Guided chains stack
/// three denoiser items; unguided chains one.
fn reverse<T: Real>(
    model: &Model<T>,
    schedule: &NoiseSchedule,
    guidance: Option<&GuidanceConfig>,
    temperature: f64,
    clip: Option<f64>,
    chains: &mut [Chain<T>],
) -> Result<()> {
    let len = chains.first().map_or(0, |c| c.x.len());
    for t in (1..=schedule.steps()).rev() {
        let eps: Vec<Vec<T>> = {
            let mut items = Vec::with_capacity(chains.len() * 3);
            for c in chains.iter() {
                items.push(DenoiserInput { x_t: &c.x, t, content: None, style: None });
                if guidance.is_some() {
                    items.push(DenoiserInput { x_t: &c.x, t, content: c.content.as_deref(), style: None });
                    items.push(DenoiserInput { x_t: &c.x, t, content: None, style: c.style.as_deref() });
                }
            }
            let mut pred = model.predict_batch(&items)?;
            match guidance {
                Some(g) => pred
                    .chunks_exact(3)
                    .map(|e| combine_guidance(&e[0], &e[1], &e[2], g.content_scale, g.style_scale))
                    .collect(),
                None => std::mem::take(&mut pred),
            }
        };

        let alpha = schedule.alpha(t);
        let ab = schedule.alpha_bar(t);
        let inv_sqrt_alpha = T::lit(1.0 / alpha.sqrt());
        let eps_coef = T::lit((1.0 - alpha) / (1.0 - ab).sqrt());
        let noise_scale = T::lit(temperature * schedule.sigma(t));
        for (c, e) in chains.iter_mut().zip(&eps) {
            if e.iter().any(|v| !v.is_finite()) {
                return Err(Error::non_finite("sample", format!("noise estimate at step {t}")));
            }
            let mean: Vec<T> = match clip {
                None => c.x.iter().zip(e).map(|(&x, &e)| inv_sqrt_alpha * (x - eps_coef * e)).collect(),
                Some(limit) => {
                    let ab_prev = schedule.alpha_bar(t - 1);
                    let (sa, s1a) = (T::lit(ab.sqrt()), T::lit((1.0 - ab).sqrt()));
                    let c0 = T::lit(ab_prev.sqrt() * schedule.beta(t) / (1.0 - ab));
                    let ct = T::lit(alpha.sqrt() * (1.0 - ab_prev) / (1.0 - ab));
                    let lim = T::lit(limit);
                    c.x.iter()
                        .zip(e)
                        .map(|(&x, &e)| {
                            let x0 = ((x - s1a * e) / sa).max(-lim).min(lim);
                            c0 * x0 + ct * x
                        })
                        .collect()
                }
            };
            if t > 1 {
                let z: Vec<T> = c.rng.normal_vec(len);
                c.x = mean.iter().zip(&z).map(|(&m, &z)| m + noise_scale * z).collect();
            } else {
                c.x = mean;
            }
        }
    }
    Ok(())
}

fn check_pair<T: Real>(model: &Model<T>, pair: &Pair<T>) -> Result<()> {
    if pair.content.len() != pair.style.len() {
        return Err(Error::shape(
            "sample",
            format!("content has length {} but style has {}", pair.content.len(), pair.style.len()),
        ));
    }
    let min = model.content.min_len().max(model.style.min_len());
    if pair.content.len() < min {
        return Err(Error::invalid("sample", format!("series length {} below minimum {min}", pair.content.len())));
    }
    Ok(())
}

/// Style transfer for many pairs at once. Item `i` draws all of its noise
/// from `Rng::new(seeds[i])`, so its output does not depend on which other
/// pairs share the batch or in which order.
pub fn sample_batch<T: Real>(
    model: &Model<T>,
    pairs: &[Pair<T>],
    schedule: &NoiseSchedule,
    guidance: &GuidanceConfig,
    seeds: &[u64],
) -> Result<Vec<Vec<T>>> {
    guidance.validate()?;
    if pairs.len() != seeds.len() {
        return Err(Error::invalid("sample_batch", format!("{} pairs but {} seeds", pairs.len(), seeds.len())));
    }
    if pairs.is_empty() {
        return Ok(vec![]);
    }
    let len = pairs[0].content.len();
    let mut chains = Vec::with_capacity(pairs.len());
    let mut stats = Vec::with_capacity(pairs.len());
    for (i, (pair, &seed)) in pairs.iter().zip(seeds).enumerate() {
        let wrap = |e: Error| Error::Item { index: i, source: Box::new(e) };
        check_pair(model, pair).map_err(wrap)?;
        if pair.content.len() != len {
            return Err(wrap(Error::shape("sample_batch", format!("length {} differs from batch length {len}", pair.content.len()))));
        }
        let (a, sa) = normalize(pair.content);
        let (b, _) = normalize(pair.style);
        let content = model.encode_content(&a).map_err(wrap)?;
        let style = model.encode_style(&b).map_err(wrap)?;
        let mut rng = Rng::new(seed);
        let x = rng.normal_vec(len);
        chains.push(Chain { x, rng, content: Some(content), style: Some(style) });
        stats.push(sa);
    }
    reverse(model, schedule, Some(guidance), guidance.temperature, guidance.clip_x0, &mut chains)?;
    Ok(chains.into_iter().zip(stats).map(|(c, s)| denormalize(&c.x, s)).collect())
}

/// Style transfer for one pair.
pub fn sample<T: Real>(
    model: &Model<T>,
    content: &[T],
    style: &[T],
    schedule: &NoiseSchedule,
    guidance: &GuidanceConfig,
    seed: u64,
) -> Result<Vec<T>> {
    let mut out = sample_batch(model, &[Pair { content, style }], schedule, guidance, &[seed])?;
    Ok(out.remove(0))
}

/// Condition-free sampling with the same noise stream layout as [`sample`];
/// the result is mapped back with `stats`.
pub fn sample_unconditional<T: Real>(
    model: &Model<T>,
    len: usize,
    schedule: &NoiseSchedule,
    temperature: f64,
    seed: u64,
    stats: NormStats,
) -> Result<Vec<T>> {
    if len == 0 {
        return Err(Error::invalid("sample_unconditional", "length must be >= 1"));
    }
    GuidanceConfig::new(0.0, 0.0, temperature).validate()?;
    let mut rng = Rng::new(seed);
    let x = rng.normal_vec(len);
    let mut chains = vec![Chain { x, rng, content: None, style: None }];
    reverse(model, schedule, None, temperature, None, &mut chains)?;
    Ok(denormalize(&chains[0].x, stats))
}
