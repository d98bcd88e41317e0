use crate::error::{Error, Result};
use crate::numerics::{Array, Real};

/// Non-overlapping patches of a right-padded series.
#[derive(Clone, Debug, PartialEq)]
pub struct Patches<T> {
    /// `n × p`, row-major.
    pub data: Vec<T>,
    pub n: usize,
    pub patch: usize,
    pub pad: usize,
}

/// Splits `x` into `ceil(L/p)` patches, padding the tail with zeros.
pub fn patchify<T: Real>(x: &[T], p: usize) -> Result<Patches<T>> {
    if x.is_empty() {
        return Err(Error::invalid("patchify", "empty series"));
    }
    if p == 0 {
        return Err(Error::invalid("patchify", "patch size must be >= 1"));
    }
    let n = x.len().div_ceil(p);
    let pad = n * p - x.len();
    let mut data = x.to_vec();
    data.resize(n * p, T::zero());
    Ok(Patches { data, n, patch: p, pad })
}

/// Concatenates patch rows and crops the padding.
pub fn unpatchify<T: Real>(patches: &Patches<T>) -> Vec<T> {
    patches.data[..patches.n * patches.patch - patches.pad].to_vec()
}

/// Sinusoidal frequencies `exp(−j·ln(10000)/(h/2 − 1))`, `j < h/2`.
pub fn time_frequencies(h: usize) -> Vec<f64> {
    let half = h / 2;
    let denom = (half - 1) as f64;
    (0..half).map(|j| (-(j as f64) * 10000f64.ln() / denom).exp()).collect()
}

/// Interleaved `[sin(tω₀), cos(tω₀), sin(tω₁), …]`.
pub fn time_embedding<T: Real>(t: usize, h: usize) -> Result<Array<T>> {
    if h % 2 != 0 || h < 4 {
        return Err(Error::invalid("time_embedding", format!("h must be even and >= 4, got {h}")));
    }
    Array::from_vec(&[h], raw_time_embedding(t, h))
}

pub(crate) fn raw_time_embedding<T: Real>(t: usize, h: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(h);
    for w in time_frequencies(h) {
        let a = t as f64 * w;
        out.push(T::lit(a.sin()));
        out.push(T::lit(a.cos()));
    }
    out
}

/// Head slopes `2^(−8i/heads)` for `i = 1..=heads`.
pub fn alibi_slopes(heads: usize) -> Vec<f64> {
    (1..=heads).map(|i| 2f64.powf(-8.0 * i as f64 / heads as f64)).collect()
}

/// `bias[i][j] = −slope·|i − j|`.
pub fn alibi_bias<T: Real>(n_q: usize, n_k: usize, slope: f64) -> Array<T> {
    Array::from_vec(&[n_q, n_k], raw_alibi(n_q, n_k, slope)).expect("alibi dims are positive")
}

pub(crate) fn raw_alibi<T: Real>(n_q: usize, n_k: usize, slope: f64) -> Vec<T> {
    let mut out = Vec::with_capacity(n_q * n_k);
    for i in 0..n_q {
        for j in 0..n_k {
            out.push(T::lit(-slope * (i as f64 - j as f64).abs()));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn patch_counts() {
        let x = vec![1.0f64; 128];
        let p = patchify(&x, 8).unwrap();
        assert_eq!((p.n, p.pad), (16, 0));
        let p = patchify(&[1.0f64; 9], 8).unwrap();
        assert_eq!((p.n, p.pad), (2, 7));
        assert_eq!(&p.data[9..], &[0.0; 7]);
    }

    #[test]
    fn unpatch_inverts_patchify() {
        for len in [8usize, 9, 64, 128] {
            let x: Vec<f64> = (0..len).map(|i| (i as f64 * 0.3).sin()).collect();
            assert_eq!(unpatchify(&patchify(&x, 8).unwrap()), x);
        }
    }

    #[test]
    fn time_embedding_examples() {
        let e = time_embedding::<f64>(0, 8).unwrap();
        assert_eq!(e.data(), &[0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
        let w = time_frequencies(4);
        assert_eq!(w[0], 1.0);
        assert!((w[1] - 1e-4).abs() < 1e-18);
        let e = time_embedding::<f64>(1, 4).unwrap();
        let want = [1f64.sin(), 1f64.cos(), 1e-4f64.sin(), 1e-4f64.cos()];
        for (a, b) in e.data().iter().zip(&want) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(time_embedding::<f64>(1, 5).is_err());
    }

    #[test]
    fn alibi_examples() {
        let b = alibi_bias::<f64>(3, 3, 1.0);
        assert_eq!(b.data(), &[0.0, -1.0, -2.0, -1.0, 0.0, -1.0, -2.0, -1.0, 0.0]);
        let b = alibi_bias::<f64>(1, 4, 0.5);
        assert_eq!(b.data()[3], -1.5);
        assert_eq!(alibi_slopes(4), vec![0.25, 1.0 / 16.0, 1.0 / 64.0, 1.0 / 256.0]);
    }

    #[test]
    fn alibi_symmetric_with_zero_diagonal() {
        for n in [1usize, 2, 7, 16] {
            let b = alibi_bias::<f64>(n, n, 0.3);
            for i in 0..n {
                assert_eq!(b.data()[i * n + i], 0.0);
                for j in 0..n {
                    assert_eq!(b.data()[i * n + j], b.data()[j * n + i]);
                }
            }
        }
    }
}
