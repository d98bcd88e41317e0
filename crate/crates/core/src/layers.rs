//! Parameterized layers bound to a [`ParamStore`], each with a forward pass
//! that returns what its backward pass needs.

use crate::numerics::conv::{conv1d_backward, conv1d_forward};
use crate::numerics::linalg::{matmul, matmul_nt, matmul_tn};
use crate::numerics::ops::{layer_norm_backward, layer_norm_rows, LayerNormCache};
use crate::numerics::{Array, ConvGeometry, Padding, ParamId, ParamStore, Real, Rng};

/// Gaussian weights with standard deviation `gain / sqrt(fan_in)`.
pub(crate) fn scaled_gaussian<T: Real>(shape: &[usize], fan_in: usize, gain: f64, rng: &mut Rng) -> Array<T> {
    let mut a = Array::zeros(shape);
    let std = gain / (fan_in as f64).sqrt();
    for v in a.data_mut() {
        *v = T::lit(std * rng.normal());
    }
    a
}

/// `y = x·W + b` over the rows of `x`; `W` is stored `in × out`.
#[derive(Clone, Debug)]
pub struct Linear {
    pub w: ParamId,
    pub b: Option<ParamId>,
    pub d_in: usize,
    pub d_out: usize,
}

impl Linear {
    pub fn new<T: Real>(
        params: &mut ParamStore<T>,
        name: &str,
        d_in: usize,
        d_out: usize,
        bias: bool,
        gain: f64,
        rng: &mut Rng,
    ) -> Self {
        let w = if gain == 0.0 {
            params.add(format!("{name}.w"), Array::zeros(&[d_in, d_out]))
        } else {
            params.add(format!("{name}.w"), scaled_gaussian(&[d_in, d_out], d_in, gain, rng))
        };
        let b = bias.then(|| params.add(format!("{name}.b"), Array::zeros(&[d_out])));
        Self { w, b, d_in, d_out }
    }

    pub fn forward<T: Real>(&self, params: &ParamStore<T>, x: &[T]) -> Vec<T> {
        let rows = x.len() / self.d_in;
        let mut y = vec![T::zero(); rows * self.d_out];
        matmul(x, params.data(self.w), &mut y, rows, self.d_in, self.d_out, false);
        if let Some(b) = self.b {
            let b = params.data(b);
            for row in y.chunks_exact_mut(self.d_out) {
                row.iter_mut().zip(b).for_each(|(v, &bi)| *v += bi);
            }
        }
        y
    }

    /// Accumulates weight gradients, returns `dx`.
    pub fn backward<T: Real>(&self, params: &ParamStore<T>, grads: &mut ParamStore<T>, x: &[T], dy: &[T]) -> Vec<T> {
        let rows = x.len() / self.d_in;
        matmul_tn(x, dy, grads.data_mut(self.w), rows, self.d_in, self.d_out, true);
        if let Some(b) = self.b {
            let db = grads.data_mut(b);
            for row in dy.chunks_exact(self.d_out) {
                db.iter_mut().zip(row).for_each(|(g, &v)| *g += v);
            }
        }
        let mut dx = vec![T::zero(); rows * self.d_in];
        matmul_nt(dy, params.data(self.w), &mut dx, rows, self.d_out, self.d_in, false);
        dx
    }
}

#[derive(Clone, Debug)]
pub struct LayerNorm {
    pub gain: ParamId,
    pub shift: ParamId,
    pub dim: usize,
}

impl LayerNorm {
    pub fn new<T: Real>(params: &mut ParamStore<T>, name: &str, dim: usize) -> Self {
        let mut g = Array::zeros(&[dim]);
        g.fill(T::one());
        let gain = params.add(format!("{name}.gain"), g);
        let shift = params.add(format!("{name}.shift"), Array::zeros(&[dim]));
        Self { gain, shift, dim }
    }

    pub fn forward<T: Real>(&self, params: &ParamStore<T>, x: &[T]) -> (Vec<T>, LayerNormCache<T>) {
        layer_norm_rows(x, params.data(self.gain), params.data(self.shift), self.dim)
    }

    pub fn backward<T: Real>(
        &self,
        params: &ParamStore<T>,
        grads: &mut ParamStore<T>,
        cache: &LayerNormCache<T>,
        dy: &[T],
    ) -> Vec<T> {
        let mut dg = vec![T::zero(); self.dim];
        let mut ds = vec![T::zero(); self.dim];
        let dx = layer_norm_backward(cache, params.data(self.gain), dy, &mut dg, &mut ds, self.dim);
        grads.data_mut(self.gain).iter_mut().zip(&dg).for_each(|(a, &b)| *a += b);
        grads.data_mut(self.shift).iter_mut().zip(&ds).for_each(|(a, &b)| *a += b);
        dx
    }
}

/// A 1-D convolution layer over a single series (`c_in × L`).
#[derive(Clone, Debug)]
pub struct Conv {
    pub w: ParamId,
    pub b: Option<ParamId>,
    pub c_in: usize,
    pub c_out: usize,
    pub k: usize,
    pub stride: usize,
    pub padding: Padding,
}

impl Conv {
    #[allow(clippy::too_many_arguments)]
    pub fn new<T: Real>(
        params: &mut ParamStore<T>,
        name: &str,
        c_in: usize,
        c_out: usize,
        k: usize,
        stride: usize,
        padding: Padding,
        bias: bool,
        gain: f64,
        rng: &mut Rng,
    ) -> Self {
        let w = params.add(format!("{name}.w"), scaled_gaussian(&[c_out, c_in, k], c_in * k, gain, rng));
        let b = bias.then(|| params.add(format!("{name}.b"), Array::zeros(&[c_out])));
        Self { w, b, c_in, c_out, k, stride, padding }
    }

    pub fn geometry(&self, len_in: usize) -> ConvGeometry {
        ConvGeometry { c_in: self.c_in, c_out: self.c_out, k: self.k, stride: self.stride, padding: self.padding, len_in }
    }

    pub fn forward<T: Real>(&self, params: &ParamStore<T>, x: &[T], len_in: usize) -> Vec<T> {
        let geom = self.geometry(len_in);
        conv1d_forward(&geom, x, params.data(self.w), self.b.map(|b| params.data(b)))
    }

    pub fn backward<T: Real>(
        &self,
        params: &ParamStore<T>,
        grads: &mut ParamStore<T>,
        x: &[T],
        len_in: usize,
        dy: &[T],
    ) -> Vec<T> {
        let geom = self.geometry(len_in);
        let mut dw = vec![T::zero(); params.data(self.w).len()];
        let mut db = self.b.map(|_| vec![T::zero(); self.c_out]);
        let dx = conv1d_backward(&geom, x, params.data(self.w), dy, &mut dw, db.as_deref_mut());
        grads.data_mut(self.w).iter_mut().zip(&dw).for_each(|(a, &b)| *a += b);
        if let (Some(b), Some(db)) = (self.b, db) {
            grads.data_mut(b).iter_mut().zip(&db).for_each(|(a, &v)| *a += v);
        }
        dx
    }
}
