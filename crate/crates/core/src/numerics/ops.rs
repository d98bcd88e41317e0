//! Elementwise activations, row softmax and layer normalization, each with
//! the backward rule used by the hand-derived gradients.

use crate::error::{Error, Result};
use crate::numerics::{Array, Real};

pub const LAYER_NORM_EPS: f64 = 1e-5;

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
const GELU_A: f64 = 0.044_715;

/// GELU, tanh approximation: `0.5·x·(1 + tanh(√(2/π)·(x + 0.044715·x³)))`.
#[inline]
pub fn gelu<T: Real>(x: T) -> T {
    let c = T::lit(GELU_C);
    let a = T::lit(GELU_A);
    let half = T::lit(0.5);
    half * x * (T::one() + (c * (x + a * x * x * x)).tanh())
}

#[inline]
pub fn gelu_grad<T: Real>(x: T) -> T {
    let c = T::lit(GELU_C);
    let a = T::lit(GELU_A);
    let half = T::lit(0.5);
    let th = (c * (x + a * x * x * x)).tanh();
    half * (T::one() + th) + half * x * (T::one() - th * th) * c * (T::one() + T::lit(3.0) * a * x * x)
}

#[inline]
pub fn sigmoid<T: Real>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}

/// SiLU: `x·sigmoid(x)`.
#[inline]
pub fn silu<T: Real>(x: T) -> T {
    x * sigmoid(x)
}

#[inline]
pub fn silu_grad<T: Real>(x: T) -> T {
    let s = sigmoid(x);
    s * (T::one() + x * (T::one() - s))
}

/// In-place softmax over each row of a `rows×cols` buffer, stabilized by
/// subtracting the row max.
pub fn softmax_rows_in_place<T: Real>(m: &mut [T], cols: usize) {
    for row in m.chunks_exact_mut(cols) {
        let max = row.iter().fold(T::neg_infinity(), |a, &b| a.max(b));
        let mut sum = T::zero();
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        let inv = T::one() / sum;
        row.iter_mut().for_each(|v| *v *= inv);
    }
}

/// Row-wise softmax of an `n×m` matrix.
pub fn softmax_rows<T: Real>(m: &Array<T>) -> Result<Array<T>> {
    if m.shape().len() != 2 {
        return Err(Error::shape("softmax_rows", format!("expected 2-D, got {:?}", m.shape())));
    }
    if m.data().iter().any(|v| v.is_nan()) {
        return Err(Error::non_finite("softmax_rows", "NaN entry"));
    }
    let mut out = m.clone();
    let cols = out.cols();
    softmax_rows_in_place(out.data_mut(), cols);
    Ok(out)
}

/// Backward of a row softmax given its output `p`: `ds = p ⊙ (dp − Σ dp⊙p)`.
pub fn softmax_rows_backward<T: Real>(p: &[T], dp: &[T], ds: &mut [T], cols: usize) {
    for ((prow, dprow), dsrow) in p.chunks_exact(cols).zip(dp.chunks_exact(cols)).zip(ds.chunks_exact_mut(cols)) {
        let s: T = prow.iter().zip(dprow).map(|(&a, &b)| a * b).sum();
        for ((d, &pi), &dpi) in dsrow.iter_mut().zip(prow).zip(dprow) {
            *d = pi * (dpi - s);
        }
    }
}

/// Saved statistics for [`layer_norm_backward`].
#[derive(Clone, Debug, Default)]
pub struct LayerNormCache<T> {
    pub xhat: Vec<T>,
    pub rstd: Vec<T>,
}

/// Row-wise layer norm of a `rows×h` buffer.
pub fn layer_norm_rows<T: Real>(x: &[T], gain: &[T], shift: &[T], h: usize) -> (Vec<T>, LayerNormCache<T>) {
    let rows = x.len() / h;
    let mut out = vec![T::zero(); x.len()];
    let mut xhat = vec![T::zero(); x.len()];
    let mut rstd = vec![T::zero(); rows];
    let hn = T::lit(h as f64);
    let eps = T::lit(LAYER_NORM_EPS);
    for r in 0..rows {
        let row = &x[r * h..(r + 1) * h];
        let mean = row.iter().copied().sum::<T>() / hn;
        let var = row.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / hn;
        let rs = T::one() / (var + eps).sqrt();
        rstd[r] = rs;
        for j in 0..h {
            let xh = (row[j] - mean) * rs;
            xhat[r * h + j] = xh;
            out[r * h + j] = xh * gain[j] + shift[j];
        }
    }
    (out, LayerNormCache { xhat, rstd })
}

/// Returns `dx`; accumulates into `dgain` and `dshift`.
pub fn layer_norm_backward<T: Real>(
    cache: &LayerNormCache<T>,
    gain: &[T],
    dy: &[T],
    dgain: &mut [T],
    dshift: &mut [T],
    h: usize,
) -> Vec<T> {
    let rows = dy.len() / h;
    let mut dx = vec![T::zero(); dy.len()];
    let hn = T::lit(h as f64);
    let mut dxhat = vec![T::zero(); h];
    for r in 0..rows {
        let xh = &cache.xhat[r * h..(r + 1) * h];
        let g = &dy[r * h..(r + 1) * h];
        for j in 0..h {
            dgain[j] += g[j] * xh[j];
            dshift[j] += g[j];
            dxhat[j] = g[j] * gain[j];
        }
        let mean_d = dxhat.iter().copied().sum::<T>() / hn;
        let mean_dx = dxhat.iter().zip(xh).map(|(&a, &b)| a * b).sum::<T>() / hn;
        let rs = cache.rstd[r];
        for j in 0..h {
            dx[r * h + j] = rs * (dxhat[j] - mean_d - xh[j] * mean_dx);
        }
    }
    dx
}

/// Layer norm of an `n×h` array.
pub fn layer_norm<T: Real>(x: &Array<T>, gain: &Array<T>, shift: &Array<T>) -> Result<Array<T>> {
    if x.shape().len() != 2 {
        return Err(Error::shape("layer_norm", format!("expected 2-D input, got {:?}", x.shape())));
    }
    let h = x.cols();
    if h < 2 {
        return Err(Error::invalid("layer_norm", format!("need h >= 2, got {h}")));
    }
    if gain.len() != h || shift.len() != h {
        return Err(Error::shape(
            "layer_norm",
            format!("h = {h} but gain has {} and shift has {}", gain.len(), shift.len()),
        ));
    }
    let (y, _) = layer_norm_rows(x.data(), gain.data(), shift.data(), h);
    Array::from_vec(x.shape(), y)
}
