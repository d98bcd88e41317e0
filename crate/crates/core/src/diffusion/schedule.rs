use crate::error::{Error, Result};
use crate::numerics::Real;

/// Linear β schedule with the derived DDPM tables, indexed `1..=T`.
///
/// Index 0 holds the convention `ᾱ₀ = 1`. The reverse-step standard
/// deviation is the posterior one, `σ_t² = β_t·(1 − ᾱ_{t−1})/(1 − ᾱ_t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseSchedule {
    steps: usize,
    beta: Vec<f64>,
    alpha: Vec<f64>,
    alpha_bar: Vec<f64>,
    sigma: Vec<f64>,
}

impl NoiseSchedule {
    pub const BETA_START: f64 = 1e-4;
    pub const BETA_END: f64 = 2e-2;

    pub fn linear(steps: usize, beta_start: f64, beta_end: f64) -> Result<Self> {
        if steps == 0 {
            return Err(Error::invalid("NoiseSchedule", "T must be >= 1"));
        }
        if !(0.0 < beta_start && beta_start <= beta_end && beta_end < 1.0) {
            return Err(Error::invalid("NoiseSchedule", format!("bad beta range [{beta_start}, {beta_end}]")));
        }
        let mut beta = vec![0.0; steps + 1];
        for (t, b) in beta.iter_mut().enumerate().skip(1) {
            *b = if steps == 1 {
                beta_start
            } else {
                beta_start + (beta_end - beta_start) * (t - 1) as f64 / (steps - 1) as f64
            };
        }
        let alpha: Vec<f64> = beta.iter().map(|b| 1.0 - b).collect();
        let mut alpha_bar = vec![1.0; steps + 1];
        for t in 1..=steps {
            alpha_bar[t] = alpha_bar[t - 1] * alpha[t];
        }
        let mut sigma = vec![0.0; steps + 1];
        for t in 1..=steps {
            sigma[t] = (beta[t] * (1.0 - alpha_bar[t - 1]) / (1.0 - alpha_bar[t])).sqrt();
        }
        Ok(Self { steps, beta, alpha, alpha_bar, sigma })
    }

    /// `T` steps from 1e-4 to 2e-2.
    pub fn default_linear(steps: usize) -> Result<Self> {
        Self::linear(steps, Self::BETA_START, Self::BETA_END)
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn beta(&self, t: usize) -> f64 {
        self.beta[t]
    }

    pub fn alpha(&self, t: usize) -> f64 {
        self.alpha[t]
    }

    pub fn alpha_bar(&self, t: usize) -> f64 {
        self.alpha_bar[t]
    }

    pub fn sigma(&self, t: usize) -> f64 {
        self.sigma[t]
    }

    pub fn check_step(&self, t: usize) -> Result<()> {
        if t == 0 || t > self.steps {
            return Err(Error::invalid("diffusion step", format!("t = {t} outside 1..={}", self.steps)));
        }
        Ok(())
    }
}

/// `x_t = √ᾱ_t·x₀ + √(1 − ᾱ_t)·ε`.
pub fn forward_noise<T: Real>(schedule: &NoiseSchedule, x0: &[T], t: usize, eps: &[T]) -> Result<Vec<T>> {
    schedule.check_step(t)?;
    if x0.len() != eps.len() {
        return Err(Error::shape("forward_noise", format!("x0 has {} samples, eps {}", x0.len(), eps.len())));
    }
    let ab = schedule.alpha_bar(t);
    let (a, b) = (T::lit(ab.sqrt()), T::lit((1.0 - ab).sqrt()));
    Ok(x0.iter().zip(eps).map(|(&x, &e)| a * x + b * e).collect())
}
