use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Kernel widths of the successive moving averages.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecompositionConfig {
    pub kernels: Vec<usize>,
}

impl Default for DecompositionConfig {
    fn default() -> Self {
        Self { kernels: vec![3, 5, 15] }
    }
}

impl DecompositionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.kernels.is_empty() {
            return Err(Error::Config("decomposition needs at least one kernel".into()));
        }
        if self.kernels.iter().any(|k| k % 2 == 0) || self.kernels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(format!("kernels must be odd and strictly increasing, got {:?}", self.kernels)));
        }
        Ok(())
    }

    pub fn max_kernel(&self) -> usize {
        self.kernels.iter().copied().max().unwrap_or(1)
    }
}

/// Centered moving average of odd width `k` with reflect padding
/// (`x[-j] = x[j]`). Requires `x.len() > k / 2`.
pub fn moving_average(x: &[f64], k: usize) -> Vec<f64> {
    let n = x.len() as isize;
    let half = (k / 2) as isize;
    assert!(k % 2 == 1 && n > half, "moving_average: width {k} on length {n}");
    let at = |i: isize| -> f64 {
        let j = if i < 0 {
            -i
        } else if i >= n {
            2 * (n - 1) - i
        } else {
            i
        };
        x[j as usize]
    };
    let inv = 1.0 / k as f64;
    (0..n).map(|i| (i - half..=i + half).map(at).sum::<f64>() * inv).collect()
}

/// Content is the last smoothing stage; style is the sum of the per-stage
/// residuals, which telescopes to `x − content`.
pub fn decompose(x: &[f64], cfg: &DecompositionConfig) -> Result<(Vec<f64>, Vec<f64>)> {
    cfg.validate()?;
    if x.len() <= cfg.max_kernel() {
        return Err(Error::invalid(
            "decompose",
            format!("series length {} must exceed the largest kernel {}", x.len(), cfg.max_kernel()),
        ));
    }
    let mut smooth = x.to_vec();
    let mut style = vec![0.0; x.len()];
    for &k in &cfg.kernels {
        let next = moving_average(&smooth, k);
        for ((s, &prev), &cur) in style.iter_mut().zip(&smooth).zip(&next) {
            *s += prev - cur;
        }
        smooth = next;
    }
    Ok((smooth, style))
}
