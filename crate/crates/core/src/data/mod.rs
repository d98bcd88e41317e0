//! Dataset files, windowing and normalization, synthetic corpora,
//! checkpoints and loss logs.
//!
//! Dataset files hold one series per line: an identifier, a tab, then
//! comma-separated values. Missing values are written as the literal `NaN`.

mod checkpoint;
mod csv_import;
mod log;
mod synthetic;

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{Real, Rng};

pub use checkpoint::{decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_VERSION};
pub use csv_import::{import_csv, CsvLayout};
pub use log::{read_loss_log, LossLog};
pub use synthetic::{generate_series, generate_synthetic, Family, FamilyParams, SyntheticSpec};

/// Guard added to the standard deviation before dividing.
pub const NORM_EPS: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct Record {
    pub id: String,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Dataset {
    pub records: Vec<Record>,
}

impl Dataset {
    pub fn new(records: Vec<Record>) -> Self {
        Self { records }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut records = Vec::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let lineno = n + 1;
            let (id, body) = line
                .split_once('\t')
                .ok_or_else(|| Error::Data(format!("line {lineno}: expected `id<TAB>values`")))?;
            let mut values = Vec::new();
            for tok in body.split(',') {
                let tok = tok.trim();
                let v = if tok == "NaN" {
                    f64::NAN
                } else {
                    match tok.parse::<f64>() {
                        Ok(v) if v.is_finite() => v,
                        _ => return Err(Error::Data(format!("line {lineno}: bad value `{tok}`"))),
                    }
                };
                values.push(v);
            }
            if body.trim().is_empty() {
                return Err(Error::Data(format!("line {lineno}: series `{id}` has no values")));
            }
            records.push(Record { id: id.to_string(), values });
        }
        Ok(Self { records })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&r.id);
            out.push('\t');
            for (i, v) in r.values.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                if v.is_nan() {
                    out.push_str("NaN");
                } else {
                    write!(out, "{v}").unwrap();
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Data(format!("cannot read dataset {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

/// Mean and population standard deviation of a window.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean: f64,
    pub std: f64,
}

impl NormStats {
    pub const IDENTITY: NormStats = NormStats { mean: 0.0, std: 1.0 - NORM_EPS };
}

/// Missing values become 0, then `(x − μ)/(σ + 1e-8)`.
pub fn normalize<T: Real>(x: &[T]) -> (Vec<T>, NormStats) {
    let clean: Vec<f64> = x.iter().map(|v| if v.is_nan() { 0.0 } else { v.as_f64() }).collect();
    let n = clean.len().max(1) as f64;
    let mean = clean.iter().sum::<f64>() / n;
    let var = clean.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    let denom = std + NORM_EPS;
    (clean.iter().map(|v| T::lit((v - mean) / denom)).collect(), NormStats { mean, std })
}

pub fn denormalize<T: Real>(x: &[T], stats: NormStats) -> Vec<T> {
    let denom = stats.std + NORM_EPS;
    x.iter().map(|v| T::lit(v.as_f64() * denom + stats.mean)).collect()
}

/// Window length; start offsets are drawn uniformly over all valid positions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub len: usize,
}

impl Default for WindowSpec {
    fn default() -> Self {
        Self { len: 128 }
    }
}

/// Draws normalized windows from the series long enough to hold one.
#[derive(Clone, Debug)]
pub struct WindowSampler<'a> {
    dataset: &'a Dataset,
    eligible: Vec<usize>,
    spec: WindowSpec,
}

impl<'a> WindowSampler<'a> {
    pub fn new(dataset: &'a Dataset, spec: WindowSpec) -> Result<Self> {
        if spec.len < 8 {
            return Err(Error::Data(format!("window length must be >= 8, got {}", spec.len)));
        }
        let eligible: Vec<usize> =
            (0..dataset.len()).filter(|&i| dataset.records[i].values.len() >= spec.len).collect();
        if eligible.is_empty() {
            return Err(Error::Data(format!(
                "no series of length >= {} among {} records",
                spec.len,
                dataset.len()
            )));
        }
        Ok(Self { dataset, eligible, spec })
    }

    pub fn spec(&self) -> WindowSpec {
        self.spec
    }

    pub fn eligible(&self) -> usize {
        self.eligible.len()
    }

    /// Series index and start offset of the next window.
    pub fn draw_position(&self, rng: &mut Rng) -> (usize, usize) {
        let idx = self.eligible[rng.below(self.eligible.len() as u64) as usize];
        let n = self.dataset.records[idx].values.len();
        let offset = rng.below((n - self.spec.len + 1) as u64) as usize;
        (idx, offset)
    }

    pub fn draw(&self, rng: &mut Rng) -> (Vec<f64>, NormStats) {
        let (idx, offset) = self.draw_position(rng);
        normalize(&self.dataset.records[idx].values[offset..offset + self.spec.len])
    }
}

/// One normalized window plus the statistics needed to undo it.
pub fn load_window(dataset: &Dataset, spec: WindowSpec, rng: &mut Rng) -> Result<(Vec<f64>, NormStats)> {
    Ok(WindowSampler::new(dataset, spec)?.draw(rng))
}
