use nalgebra::{DMatrix, SymmetricEigen};

use super::embedding::Embedding;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct PcaSpread {
    /// Coordinates on the two leading principal axes.
    pub points: Vec<[f64; 2]>,
    /// Mean Euclidean distance of `points` to their centroid.
    pub dispersion: f64,
    /// Unit principal axes (zero when the data has no spread along them).
    pub axes: [Vec<f64>; 2],
}

/// Two-component PCA of raw vectors. Axis signs are fixed so that the
/// largest-magnitude entry is positive.
pub fn pca_spread_vectors(vectors: &[Vec<f64>]) -> Result<PcaSpread> {
    let n = vectors.len();
    if n < 3 {
        return Err(Error::invalid("pca_spread", format!("need at least 3 samples, got {n}")));
    }
    let d = vectors[0].len();
    if vectors.iter().any(|v| v.len() != d) {
        return Err(Error::shape("pca_spread", "vectors differ in length"));
    }
    let mean: Vec<f64> = (0..d).map(|j| vectors.iter().map(|v| v[j]).sum::<f64>() / n as f64).collect();
    let centered = DMatrix::from_fn(n, d, |i, j| vectors[i][j] - mean[j]);
    let cov = centered.transpose() * &centered / n as f64;
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let scale_floor = 1e-12 * eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let axis = |k: usize| -> Vec<f64> {
        let Some(&idx) = order.get(k) else { return vec![0.0; d] };
        if eig.eigenvalues[idx] <= scale_floor {
            return vec![0.0; d];
        }
        let mut v: Vec<f64> = eig.eigenvectors.column(idx).iter().copied().collect();
        let lead = v.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
        if lead < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        v
    };
    let axes = [axis(0), axis(1)];
    let points: Vec<[f64; 2]> = (0..n)
        .map(|i| {
            let row = centered.row(i);
            let p = |a: &[f64]| row.iter().zip(a).map(|(x, y)| x * y).sum::<f64>();
            [p(&axes[0]), p(&axes[1])]
        })
        .collect();
    let cx = points.iter().map(|p| p[0]).sum::<f64>() / n as f64;
    let cy = points.iter().map(|p| p[1]).sum::<f64>() / n as f64;
    let dispersion = points.iter().map(|p| ((p[0] - cx).powi(2) + (p[1] - cy).powi(2)).sqrt()).sum::<f64>() / n as f64;
    Ok(PcaSpread { points, dispersion, axes })
}

/// Embeds every sample, then projects onto the two leading components.
pub fn pca_spread(samples: &[Vec<f64>], embedding: &dyn Embedding) -> Result<PcaSpread> {
    let vectors: Vec<Vec<f64>> = samples.iter().map(|s| embedding.embed(s)).collect();
    pca_spread_vectors(&vectors)
}
