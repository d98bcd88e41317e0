use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use super::{cp, rm, si, DecompositionConfig, Embedding};
use crate::data::normalize;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairScore {
    pub cp: f64,
    pub si: f64,
    pub rm: f64,
    pub overall: f64,
}

/// Mean and standard error of the mean.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: f64,
    pub stderr: f64,
}

impl Aggregate {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self { mean: f64::NAN, stderr: f64::NAN };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let stderr = if n > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, stderr }
    }
}

impl fmt::Display for Aggregate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.4} ± {:.4}", self.mean, self.stderr)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub embedding: String,
    pub pairs: Vec<PairScore>,
    pub cp: Aggregate,
    pub si: Aggregate,
    pub rm: Aggregate,
    pub overall: Aggregate,
}

impl EvalReport {
    pub fn from_scores(embedding: &str, pairs: Vec<PairScore>) -> Self {
        let col = |f: fn(&PairScore) -> f64| Aggregate::of(&pairs.iter().map(f).collect::<Vec<_>>());
        Self {
            embedding: embedding.to_string(),
            cp: col(|p| p.cp),
            si: col(|p| p.si),
            rm: col(|p| p.rm),
            overall: col(|p| p.overall),
            pairs,
        }
    }

    /// Tab-separated per-pair rows with a header.
    pub fn to_tsv(&self) -> String {
        let mut s = String::from("pair\tcp\tsi\trm\toverall\n");
        for (i, p) in self.pairs.iter().enumerate() {
            writeln!(s, "{i}\t{}\t{}\t{}\t{}", p.cp, p.si, p.rm, p.overall).unwrap();
        }
        s
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "pairs: {}   embedding: {}", self.pairs.len(), self.embedding)?;
        writeln!(f, "{:<8} {:>20}", "metric", "mean ± stderr")?;
        for (name, a) in [("CP", self.cp), ("SI", self.si), ("RM", self.rm), ("overall", self.overall)] {
            writeln!(f, "{:<8} {:>20}", name, a.to_string())?;
        }
        Ok(())
    }
}

/// Scores `(x̂, a, b)` triples after z-normalizing each series.
pub fn evaluate(
    triples: &[(&[f64], &[f64], &[f64])],
    embedding: &dyn Embedding,
    cfg: &DecompositionConfig,
) -> Result<EvalReport> {
    let mut pairs = Vec::with_capacity(triples.len());
    for (i, (x, a, b)) in triples.iter().enumerate() {
        let wrap = |e: Error| Error::Item { index: i, source: Box::new(e) };
        let (x, a, b) = (normalize(x).0, normalize(a).0, normalize(b).0);
        let c = cp(&x, &a, cfg).map_err(wrap)?;
        let s = si(&x, &b, cfg).map_err(wrap)?;
        let r = rm(&x, &a, &b, embedding, cfg).map_err(wrap)?;
        pairs.push(PairScore { cp: c, si: s, rm: r, overall: (c + s + r) / 3.0 });
    }
    Ok(EvalReport::from_scores(embedding.name(), pairs))
}
