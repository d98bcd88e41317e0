//! 1-D convolution (cross-correlation convention) and linear resampling.

use crate::error::{Error, Result};
use crate::numerics::linalg::{matmul, matmul_nt, matmul_tn};
use crate::numerics::{Array, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Padding {
    /// Zero padding, `(k−1)/2` on the left and the rest on the right.
    Zero,
    /// Reflection about the edge sample (edge not repeated), same split.
    Reflect,
    /// No padding.
    None,
}

/// Static description of one convolution call.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvGeometry {
    pub c_in: usize,
    pub c_out: usize,
    pub k: usize,
    pub stride: usize,
    pub padding: Padding,
    pub len_in: usize,
}

impl ConvGeometry {
    pub fn pads(&self) -> (usize, usize) {
        match self.padding {
            Padding::None => (0, 0),
            Padding::Zero | Padding::Reflect => {
                let left = (self.k - 1) / 2;
                (left, self.k - 1 - left)
            }
        }
    }

    pub fn len_out(&self) -> usize {
        let (l, r) = self.pads();
        (self.len_in + l + r - self.k) / self.stride + 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.stride == 0 || self.c_in == 0 || self.c_out == 0 {
            return Err(Error::invalid("conv1d", format!("degenerate geometry {self:?}")));
        }
        let (l, r) = self.pads();
        if self.len_in + l + r < self.k {
            return Err(Error::invalid(
                "conv1d",
                format!("input length {} too short for kernel {}", self.len_in, self.k),
            ));
        }
        if self.padding == Padding::Reflect && self.len_in < self.k {
            return Err(Error::invalid(
                "conv1d",
                format!("reflect padding needs L >= k, got L = {} and k = {}", self.len_in, self.k),
            ));
        }
        Ok(())
    }

    /// Source index for padded position `q`, or `None` for a zero.
    #[inline]
    fn source(&self, q: usize) -> Option<usize> {
        let (l, _) = self.pads();
        let i = q as isize - l as isize;
        let n = self.len_in as isize;
        if (0..n).contains(&i) {
            return Some(i as usize);
        }
        match self.padding {
            Padding::Reflect => {
                let j = if i < 0 { -i } else { 2 * (n - 1) - i };
                Some(j as usize)
            }
            _ => None,
        }
    }

    /// `(c_in·k) × len_out` patch matrix.
    fn columns<T: Real>(&self, x: &[T]) -> Vec<T> {
        let lo = self.len_out();
        let mut cols = vec![T::zero(); self.c_in * self.k * lo];
        for ci in 0..self.c_in {
            let xrow = &x[ci * self.len_in..(ci + 1) * self.len_in];
            for j in 0..self.k {
                let dst = &mut cols[(ci * self.k + j) * lo..(ci * self.k + j + 1) * lo];
                for (o, d) in dst.iter_mut().enumerate() {
                    if let Some(s) = self.source(o * self.stride + j) {
                        *d = xrow[s];
                    }
                }
            }
        }
        cols
    }

    fn scatter_columns<T: Real>(&self, dcols: &[T], dx: &mut [T]) {
        let lo = self.len_out();
        for ci in 0..self.c_in {
            for j in 0..self.k {
                let src = &dcols[(ci * self.k + j) * lo..(ci * self.k + j + 1) * lo];
                for (o, &g) in src.iter().enumerate() {
                    if let Some(s) = self.source(o * self.stride + j) {
                        dx[ci * self.len_in + s] += g;
                    }
                }
            }
        }
    }
}

/// Forward pass; `x` is `c_in × len_in`, `w` is `c_out × c_in × k`.
pub fn conv1d_forward<T: Real>(geom: &ConvGeometry, x: &[T], w: &[T], bias: Option<&[T]>) -> Vec<T> {
    let lo = geom.len_out();
    let cols = geom.columns(x);
    let mut out = vec![T::zero(); geom.c_out * lo];
    matmul(w, &cols, &mut out, geom.c_out, geom.c_in * geom.k, lo, false);
    if let Some(b) = bias {
        for (co, row) in out.chunks_exact_mut(lo).enumerate() {
            row.iter_mut().for_each(|v| *v += b[co]);
        }
    }
    out
}

/// Backward pass. Accumulates into `dw` and `dbias`; returns `dx`.
pub fn conv1d_backward<T: Real>(
    geom: &ConvGeometry,
    x: &[T],
    w: &[T],
    dout: &[T],
    dw: &mut [T],
    dbias: Option<&mut [T]>,
) -> Vec<T> {
    let lo = geom.len_out();
    let ck = geom.c_in * geom.k;
    let cols = geom.columns(x);
    matmul_nt(dout, &cols, dw, geom.c_out, lo, ck, true);
    if let Some(db) = dbias {
        for (co, row) in dout.chunks_exact(lo).enumerate() {
            db[co] += row.iter().copied().sum::<T>();
        }
    }
    let mut dcols = vec![T::zero(); ck * lo];
    matmul_tn(w, dout, &mut dcols, geom.c_out, ck, lo, false);
    let mut dx = vec![T::zero(); geom.c_in * geom.len_in];
    geom.scatter_columns(&dcols, &mut dx);
    dx
}

/// Checked convolution on shaped arrays.
pub fn conv1d<T: Real>(
    input: &Array<T>,
    kernel: &Array<T>,
    stride: usize,
    padding: Padding,
    bias: Option<&Array<T>>,
) -> Result<Array<T>> {
    if input.shape().len() != 2 {
        return Err(Error::shape("conv1d", format!("input must be C_in×L, got {:?}", input.shape())));
    }
    if kernel.shape().len() != 3 {
        return Err(Error::shape("conv1d", format!("kernel must be C_out×C_in×k, got {:?}", kernel.shape())));
    }
    let (c_in, len_in) = (input.shape()[0], input.shape()[1]);
    let (c_out, kc_in, k) = (kernel.shape()[0], kernel.shape()[1], kernel.shape()[2]);
    if kc_in != c_in {
        return Err(Error::shape(
            "conv1d",
            format!("input has C_in = {c_in} but kernel expects C_in = {kc_in}"),
        ));
    }
    if let Some(b) = bias {
        if b.len() != c_out {
            return Err(Error::shape("conv1d", format!("bias has {} entries, C_out = {c_out}", b.len())));
        }
    }
    let geom = ConvGeometry { c_in, c_out, k, stride, padding, len_in };
    geom.validate()?;
    let out = conv1d_forward(&geom, input.data(), kernel.data(), bias.map(|b| b.data()));
    Array::from_vec(&[c_out, geom.len_out()], out)
}

/// Interpolation weights: output `i` reads `(lo, hi, frac)`. Endpoints align.
fn interp_taps(len_in: usize, len_out: usize) -> Vec<(usize, usize, f64)> {
    (0..len_out)
        .map(|i| {
            if len_out == 1 {
                return (0, 0, 0.0);
            }
            let pos = i as f64 * (len_in - 1) as f64 / (len_out - 1) as f64;
            let lo = (pos.floor() as usize).min(len_in - 1);
            let hi = (lo + 1).min(len_in - 1);
            (lo, hi, pos - lo as f64)
        })
        .collect()
}

pub fn interp_forward<T: Real>(x: &[T], len_out: usize) -> Vec<T> {
    interp_taps(x.len(), len_out)
        .into_iter()
        .map(|(lo, hi, f)| {
            let f = T::lit(f);
            x[lo] * (T::one() - f) + x[hi] * f
        })
        .collect()
}

pub fn interp_backward<T: Real>(len_in: usize, dout: &[T]) -> Vec<T> {
    let mut dx = vec![T::zero(); len_in];
    for ((lo, hi, f), &g) in interp_taps(len_in, dout.len()).into_iter().zip(dout) {
        let f = T::lit(f);
        dx[lo] += g * (T::one() - f);
        dx[hi] += g * f;
    }
    dx
}

/// Piecewise-linear resize of a `1×L_small` array to `1×target_len`.
pub fn linear_interp_resize<T: Real>(x: &Array<T>, target_len: usize) -> Result<Array<T>> {
    let n = x.len();
    if n < 2 {
        return Err(Error::invalid("linear_interp_resize", format!("need at least 2 samples, got {n}")));
    }
    if target_len < 1 {
        return Err(Error::invalid("linear_interp_resize", "target length must be >= 1"));
    }
    Array::from_vec(&[1, target_len], interp_forward(x.data(), target_len))
}
