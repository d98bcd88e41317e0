//! Comparison methods: moving-average stitching, Haar detail swap and an
//! optimization-based transfer over differentiable feature maps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{moving_average, DecompositionConfig};

fn same_len(op: &'static str, a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::shape(op, format!("lengths {} and {} differ", a.len(), b.len())));
    }
    if a.is_empty() {
        return Err(Error::invalid(op, "empty series"));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StitchConfig {
    pub kernel: usize,
}

impl Default for StitchConfig {
    fn default() -> Self {
        Self { kernel: 15 }
    }
}

/// `smooth(a) + (b − smooth(b))`, evaluated as `b + (smooth(a) − smooth(b))`
/// so that `stitch(x, x)` returns `x` bit for bit.
pub fn stitch(a: &[f64], b: &[f64], cfg: &StitchConfig) -> Result<Vec<f64>> {
    same_len("stitch", a, b)?;
    if cfg.kernel < 3 || cfg.kernel % 2 == 0 {
        return Err(Error::Config(format!("stitch kernel must be odd and >= 3, got {}", cfg.kernel)));
    }
    if a.len() <= cfg.kernel / 2 {
        return Err(Error::invalid("stitch", format!("length {} too short for kernel {}", a.len(), cfg.kernel)));
    }
    let sa = moving_average(a, cfg.kernel);
    let sb = moving_average(b, cfg.kernel);
    Ok(b.iter().zip(sa.iter().zip(&sb)).map(|(&b, (&sa, &sb))| b + (sa - sb)).collect())
}

/// Mirror index into `0..n` without repeating the edge sample.
fn reflect_index(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let m = i.rem_euclid(period);
    (if m < n as isize { m } else { period - m }) as usize
}

fn pad_reflect(x: &[f64], multiple: usize) -> Vec<f64> {
    let target = x.len().div_ceil(multiple) * multiple;
    (0..target).map(|i| x[reflect_index(i as isize, x.len())]).collect()
}

/// Orthonormal Haar coefficients: the level-`levels` approximation and the
/// detail bands, finest first. Length must be a multiple of `2^levels`.
pub fn haar_forward(x: &[f64], levels: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    if levels < 1 {
        return Err(Error::invalid("haar", "levels must be >= 1"));
    }
    if x.is_empty() || x.len() % (1 << levels) != 0 {
        return Err(Error::shape("haar", format!("length {} is not a multiple of 2^{levels}", x.len())));
    }
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut approx = x.to_vec();
    let mut details = Vec::with_capacity(levels);
    for _ in 0..levels {
        let (a, d): (Vec<f64>, Vec<f64>) = approx.chunks_exact(2).map(|p| (r * (p[0] + p[1]), r * (p[0] - p[1]))).unzip();
        details.push(d);
        approx = a;
    }
    Ok((approx, details))
}

pub fn haar_inverse(approx: &[f64], details: &[Vec<f64>]) -> Result<Vec<f64>> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut x = approx.to_vec();
    for d in details.iter().rev() {
        if d.len() != x.len() {
            return Err(Error::shape("haar_inverse", format!("band of {} against approximation of {}", d.len(), x.len())));
        }
        x = x.iter().zip(d).flat_map(|(&a, &d)| [r * (a + d), r * (a - d)]).collect();
    }
    Ok(x)
}

/// Keeps `a`'s approximation, takes every detail band from `b`. Inputs are
/// reflect-padded to a multiple of `2^levels` and the result cropped back.
pub fn haar_swap(a: &[f64], b: &[f64], levels: usize) -> Result<Vec<f64>> {
    same_len("haar_swap", a, b)?;
    if levels < 1 {
        return Err(Error::invalid("haar_swap", "levels must be >= 1"));
    }
    let m = 1usize << levels;
    let (approx, _) = haar_forward(&pad_reflect(a, m), levels)?;
    let (_, details) = haar_forward(&pad_reflect(b, m), levels)?;
    let mut out = haar_inverse(&approx, &details)?;
    out.truncate(a.len());
    Ok(out)
}

/// A differentiable map from a series to a feature vector.
pub trait FeatureMap {
    fn apply(&self, x: &[f64]) -> Vec<f64>;
    /// `Jᵀ·g` at `x`.
    fn vjp(&self, x: &[f64], g: &[f64]) -> Vec<f64>;
}

/// Adjoint of [`moving_average`] (reflect padding included).
fn moving_average_adjoint(g: &[f64], k: usize) -> Vec<f64> {
    let n = g.len();
    let half = (k / 2) as isize;
    let inv = 1.0 / k as f64;
    let mut out = vec![0.0; n];
    for (i, &gi) in g.iter().enumerate() {
        for j in i as isize - half..=i as isize + half {
            out[reflect_index(j, n)] += gi * inv;
        }
    }
    out
}

/// Linear content extractor: the cascade of moving averages.
#[derive(Clone, Debug, Default)]
pub struct ContentFeatures {
    pub cfg: DecompositionConfig,
}

/// Linear style extractor: the input minus its content component.
#[derive(Clone, Debug, Default)]
pub struct StyleFeatures {
    pub cfg: DecompositionConfig,
}

impl FeatureMap for ContentFeatures {
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.cfg.kernels.iter().fold(x.to_vec(), |s, &k| moving_average(&s, k))
    }

    fn vjp(&self, _x: &[f64], g: &[f64]) -> Vec<f64> {
        self.cfg.kernels.iter().rev().fold(g.to_vec(), |s, &k| moving_average_adjoint(&s, k))
    }
}

impl FeatureMap for StyleFeatures {
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let c = ContentFeatures { cfg: self.cfg.clone() }.apply(x);
        x.iter().zip(c).map(|(x, c)| x - c).collect()
    }

    fn vjp(&self, x: &[f64], g: &[f64]) -> Vec<f64> {
        let c = ContentFeatures { cfg: self.cfg.clone() }.vjp(x, g);
        g.iter().zip(c).map(|(g, c)| g - c).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NstConfig {
    pub alpha: f64,
    pub beta: f64,
    pub step: f64,
    pub iterations: usize,
}

impl Default for NstConfig {
    fn default() -> Self {
        Self { alpha: 1.0, beta: 1.0, step: 0.05, iterations: 200 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NstResult {
    pub output: Vec<f64>,
    /// Loss before each update, then after the last one.
    pub losses: Vec<f64>,
}

fn sq_dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Gradient descent on `α‖f_c(x)−f_c(a)‖² + β‖f_s(x)−f_s(b)‖²` from `x = a`.
pub fn nst_optimize(
    a: &[f64],
    b: &[f64],
    cfg: &NstConfig,
    content: &dyn FeatureMap,
    style: &dyn FeatureMap,
) -> Result<NstResult> {
    same_len("nst", a, b)?;
    if cfg.alpha < 0.0 || cfg.beta < 0.0 || (cfg.alpha == 0.0 && cfg.beta == 0.0) {
        return Err(Error::Config("nst weights must be >= 0 and not both 0".into()));
    }
    if !(cfg.step > 0.0) {
        return Err(Error::Config("nst step must be positive".into()));
    }
    let fa = content.apply(a);
    let fb = style.apply(b);
    let mut x = a.to_vec();
    let mut losses = Vec::with_capacity(cfg.iterations + 1);
    for it in 0..=cfg.iterations {
        let fc = content.apply(&x);
        let fs = style.apply(&x);
        let loss = cfg.alpha * sq_dist(&fc, &fa) + cfg.beta * sq_dist(&fs, &fb);
        if !loss.is_finite() || loss > 1e6 {
            return Err(Error::Divergence(format!("nst loss {loss} at iteration {it}")));
        }
        losses.push(loss);
        if it == cfg.iterations {
            break;
        }
        let gc: Vec<f64> = fc.iter().zip(&fa).map(|(p, q)| 2.0 * cfg.alpha * (p - q)).collect();
        let gs: Vec<f64> = fs.iter().zip(&fb).map(|(p, q)| 2.0 * cfg.beta * (p - q)).collect();
        let g: Vec<f64> = content.vjp(&x, &gc).iter().zip(style.vjp(&x, &gs)).map(|(a, b)| a + b).collect();
        x.iter_mut().zip(&g).for_each(|(x, g)| *x -= cfg.step * g);
    }
    Ok(NstResult { output: x, losses })
}

/// [`nst_optimize`] with the linear content/style extractors.
pub fn nst_default(a: &[f64], b: &[f64], cfg: &NstConfig) -> Result<NstResult> {
    let d = DecompositionConfig::default();
    if a.len() <= d.max_kernel() {
        return Err(Error::invalid("nst", format!("length {} must exceed {}", a.len(), d.max_kernel())));
    }
    nst_optimize(a, b, cfg, &ContentFeatures { cfg: d.clone() }, &StyleFeatures { cfg: d })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn haar_two_point_swap() {
        let out = haar_swap(&[2.0, 2.0], &[3.0, 1.0], 1).unwrap();
        assert!((out[0] - 3.0).abs() < 1e-12 && (out[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reflect_index_folds() {
        let got: Vec<usize> = (-3..7).map(|i| reflect_index(i, 4)).collect();
        assert_eq!(got, vec![3, 2, 1, 0, 1, 2, 3, 2, 1, 0]);
    }

    #[test]
    fn adjoint_matches_dense_transpose() {
        let n = 9;
        let k = 5;
        let mut dense = vec![vec![0.0; n]; n];
        for (j, col) in (0..n).map(|j| (j, moving_average(&(0..n).map(|i| (i == j) as u8 as f64).collect::<Vec<_>>(), k))) {
            for i in 0..n {
                dense[i][j] = col[i];
            }
        }
        let g: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin()).collect();
        let got = moving_average_adjoint(&g, k);
        for j in 0..n {
            let want: f64 = (0..n).map(|i| dense[i][j] * g[i]).sum();
            assert!((got[j] - want).abs() < 1e-14);
        }
    }
}
