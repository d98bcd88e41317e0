//! Seeded synthetic corpora.
//!
//! Every series is the sum of a content component and a style component,
//! each drawn from one family. With `u = t/L`:
//!
//! * `trend_sine`: `c + m·u + A·sin(2π·f·u + φ)`
//! * `piecewise_level`: `k` constant segments with N(0, 1) levels
//! * `ar1`: `y_t = ρ·y_{t−1} + e_t`, innovations scaled for stationary std `s`
//! * `sine_burst`: a short-period sine whose amplitude jumps inside bursts
//!
//! The first two are slow and act as content; the last two carry texture.

use serde::{Deserialize, Serialize};

use super::{Dataset, Record};
use crate::error::{Error, Result};
use crate::numerics::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    TrendSine,
    PiecewiseLevel,
    Ar1,
    SineBurst,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::TrendSine, Family::PiecewiseLevel, Family::Ar1, Family::SineBurst];

    pub fn name(self) -> &'static str {
        match self {
            Family::TrendSine => "trend_sine",
            Family::PiecewiseLevel => "piecewise_level",
            Family::Ar1 => "ar1",
            Family::SineBurst => "sine_burst",
        }
    }
}

/// Parameter ranges; every draw is uniform within its range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyParams {
    pub slope: (f64, f64),
    pub amplitude: (f64, f64),
    pub cycles: (f64, f64),
    pub segments: (usize, usize),
    pub ar_coef: (f64, f64),
    pub ar_std: (f64, f64),
    pub burst_period: (f64, f64),
    pub burst_amplitude: (f64, f64),
    pub burst_count: (usize, usize),
}

impl Default for FamilyParams {
    fn default() -> Self {
        Self {
            slope: (-2.0, 2.0),
            amplitude: (0.5, 1.5),
            cycles: (0.5, 3.0),
            segments: (2, 5),
            ar_coef: (0.2, 0.8),
            ar_std: (0.2, 0.5),
            burst_period: (3.0, 6.0),
            burst_amplitude: (0.3, 0.8),
            burst_count: (1, 3),
        }
    }
}

impl FamilyParams {
    /// Ranges for series `factor` times as long with the same per-sample
    /// time scale: cycle, segment and burst counts and the total trend
    /// change scale by `factor`; counts stay at least 1.
    pub fn extended(&self, factor: f64) -> Self {
        let count = |n: usize| ((n as f64 * factor).round() as usize).max(1);
        Self {
            slope: (self.slope.0 * factor, self.slope.1 * factor),
            cycles: (self.cycles.0 * factor, self.cycles.1 * factor),
            segments: (count(self.segments.0), count(self.segments.1)),
            burst_count: (count(self.burst_count.0), count(self.burst_count.1)),
            ..self.clone()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub content: Vec<Family>,
    pub style: Vec<Family>,
    pub count: usize,
    pub len: usize,
    pub seed: u64,
    #[serde(default)]
    pub params: FamilyParams,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            content: vec![Family::TrendSine, Family::PiecewiseLevel],
            style: vec![Family::Ar1, Family::SineBurst],
            count: 2000,
            len: 256,
            seed: 0,
            params: FamilyParams::default(),
        }
    }
}

fn draw(rng: &mut Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.uniform_range(lo, hi)
    }
}

fn draw_int(rng: &mut Rng, (lo, hi): (usize, usize)) -> usize {
    lo + rng.below((hi - lo + 1) as u64) as usize
}

/// One component of length `len`.
pub fn generate_series(family: Family, p: &FamilyParams, len: usize, rng: &mut Rng) -> Vec<f64> {
    let n = len as f64;
    match family {
        Family::TrendSine => {
            let c = rng.uniform_range(-1.0, 1.0);
            let m = draw(rng, p.slope);
            let a = draw(rng, p.amplitude);
            let f = draw(rng, p.cycles);
            let phi = rng.uniform_range(0.0, std::f64::consts::TAU);
            (0..len)
                .map(|t| {
                    let u = t as f64 / n;
                    c + m * u + a * (std::f64::consts::TAU * f * u + phi).sin()
                })
                .collect()
        }
        Family::PiecewiseLevel => {
            let k = draw_int(rng, p.segments).max(1);
            let mut cuts: Vec<usize> = (0..k - 1).map(|_| rng.below(len as u64) as usize).collect();
            cuts.sort_unstable();
            let levels: Vec<f64> = (0..k).map(|_| rng.normal()).collect();
            (0..len).map(|t| levels[cuts.iter().filter(|&&c| c <= t).count()]).collect()
        }
        Family::Ar1 => {
            let rho = draw(rng, p.ar_coef);
            let s = draw(rng, p.ar_std);
            let innov = s * (1.0 - rho * rho).max(0.0).sqrt();
            let mut y = s * rng.normal();
            let mut out = Vec::with_capacity(len);
            for _ in 0..len {
                out.push(y);
                y = rho * y + innov * rng.normal();
            }
            out
        }
        Family::SineBurst => {
            let period = draw(rng, p.burst_period);
            let phi = rng.uniform_range(0.0, std::f64::consts::TAU);
            let base = 0.25 * draw(rng, p.burst_amplitude);
            let bursts: Vec<(usize, usize, f64)> = (0..draw_int(rng, p.burst_count))
                .map(|_| {
                    let width = (len / 16).max(1) + rng.below((len / 4).max(1) as u64) as usize;
                    let start = rng.below(len as u64) as usize;
                    (start, start + width, draw(rng, p.burst_amplitude))
                })
                .collect();
            (0..len)
                .map(|t| {
                    let amp = bursts.iter().filter(|b| t >= b.0 && t < b.1).map(|b| b.2).fold(base, f64::max);
                    amp * (std::f64::consts::TAU * t as f64 / period + phi).sin()
                })
                .collect()
        }
    }
}

/// `spec.count` series, each a content draw plus a style draw. Byte
/// reproducible from `spec.seed`.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Dataset> {
    if spec.len == 0 {
        return Err(Error::Config("synthetic length must be >= 1".into()));
    }
    if spec.content.is_empty() && spec.style.is_empty() {
        return Err(Error::Config("synthetic spec needs at least one family".into()));
    }
    let mut rng = Rng::new(spec.seed);
    let mut records = Vec::with_capacity(spec.count);
    for i in 0..spec.count {
        let mut values = vec![0.0; spec.len];
        let mut tags = Vec::new();
        for pool in [&spec.content, &spec.style] {
            if pool.is_empty() {
                continue;
            }
            let fam = pool[rng.below(pool.len() as u64) as usize];
            for (v, c) in values.iter_mut().zip(generate_series(fam, &spec.params, spec.len, &mut rng)) {
                *v += c;
            }
            tags.push(fam.name());
        }
        records.push(Record { id: format!("syn{i:05}:{}", tags.join("+")), values });
    }
    Ok(Dataset::new(records))
}
