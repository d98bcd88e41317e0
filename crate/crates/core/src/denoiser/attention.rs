//! Multi-head attention with additive linear position biases.

use crate::denoiser::embed::raw_alibi;
use crate::layers::Linear;
use crate::numerics::linalg::{matmul, matmul_nt, matmul_tn};
use crate::numerics::ops::{softmax_rows_backward, softmax_rows_in_place};
use crate::numerics::{ParamStore, Real, Rng};

#[derive(Clone, Debug)]
pub struct Attention {
    pub wq: Linear,
    pub wk: Linear,
    pub wv: Linear,
    pub wo: Linear,
    pub heads: usize,
    pub hidden: usize,
}

/// Token layout shared by a batch: `items` blocks of `n_q` query rows and
/// `n_k` key rows.
#[derive(Clone, Copy, Debug)]
pub struct Layout {
    pub items: usize,
    pub n_q: usize,
    pub n_k: usize,
}

#[derive(Clone, Debug)]
pub struct AttnCache<T> {
    xq: Vec<T>,
    xkv: Option<Vec<T>>,
    q: Vec<T>,
    k: Vec<T>,
    v: Vec<T>,
    probs: Vec<T>,
    o: Vec<T>,
    gates: Vec<bool>,
    layout: Layout,
}

fn gather<T: Real>(m: &[T], item: usize, rows: usize, head: usize, dk: usize, hidden: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(rows * dk);
    for r in 0..rows {
        let base = (item * rows + r) * hidden + head * dk;
        out.extend_from_slice(&m[base..base + dk]);
    }
    out
}

fn scatter_add<T: Real>(m: &mut [T], src: &[T], item: usize, rows: usize, head: usize, dk: usize, hidden: usize) {
    for r in 0..rows {
        let base = (item * rows + r) * hidden + head * dk;
        m[base..base + dk].iter_mut().zip(&src[r * dk..(r + 1) * dk]).for_each(|(a, &b)| *a += b);
    }
}

impl Attention {
    pub fn new<T: Real>(params: &mut ParamStore<T>, name: &str, hidden: usize, heads: usize, rng: &mut Rng) -> Self {
        let mk = |params: &mut ParamStore<T>, n: &str, rng: &mut Rng| {
            Linear::new(params, &format!("{name}.{n}"), hidden, hidden, false, 1.0, rng)
        };
        Self {
            wq: mk(params, "wq", rng),
            wk: mk(params, "wk", rng),
            wv: mk(params, "wv", rng),
            wo: mk(params, "wo", rng),
            heads,
            hidden,
        }
    }

    fn dk(&self) -> usize {
        self.hidden / self.heads
    }

    /// `xkv = None` means self-attention on `xq`. Items whose gate is off get
    /// exactly zero output rows.
    pub fn forward<T: Real>(
        &self,
        params: &ParamStore<T>,
        xq: &[T],
        xkv: Option<&[T]>,
        layout: Layout,
        slopes: &[f64],
        gates: &[bool],
    ) -> (Vec<T>, AttnCache<T>) {
        let (h, dk) = (self.hidden, self.dk());
        let Layout { items, n_q, n_k } = layout;
        let kv_src = xkv.unwrap_or(xq);
        let q = self.wq.forward(params, xq);
        let k = self.wk.forward(params, kv_src);
        let v = self.wv.forward(params, kv_src);
        let scale = T::lit(1.0 / (dk as f64).sqrt());
        let biases: Vec<Vec<T>> = slopes.iter().map(|&s| raw_alibi(n_q, n_k, s)).collect();

        let mut probs = vec![T::zero(); items * self.heads * n_q * n_k];
        let mut o = vec![T::zero(); items * n_q * h];
        for b in (0..items).filter(|&b| gates[b]) {
            for hd in 0..self.heads {
                let qb = gather(&q, b, n_q, hd, dk, h);
                let kb = gather(&k, b, n_k, hd, dk, h);
                let vb = gather(&v, b, n_k, hd, dk, h);
                let p = &mut probs[(b * self.heads + hd) * n_q * n_k..(b * self.heads + hd + 1) * n_q * n_k];
                matmul_nt(&qb, &kb, p, n_q, dk, n_k, false);
                for (s, &bias) in p.iter_mut().zip(&biases[hd]) {
                    *s = *s * scale + bias;
                }
                softmax_rows_in_place(p, n_k);
                let mut ob = vec![T::zero(); n_q * dk];
                matmul(p, &vb, &mut ob, n_q, n_k, dk, false);
                scatter_add(&mut o, &ob, b, n_q, hd, dk, h);
            }
        }
        let out = self.wo.forward(params, &o);
        let cache = AttnCache {
            xq: xq.to_vec(),
            xkv: xkv.map(<[T]>::to_vec),
            q,
            k,
            v,
            probs,
            o,
            gates: gates.to_vec(),
            layout,
        };
        (out, cache)
    }

    /// Returns `(dxq, dxkv)`; for self-attention `dxkv` is already folded
    /// into `dxq` and the second value is empty.
    pub fn backward<T: Real>(
        &self,
        params: &ParamStore<T>,
        grads: &mut ParamStore<T>,
        cache: &AttnCache<T>,
        dout: &[T],
    ) -> (Vec<T>, Vec<T>) {
        let (h, dk) = (self.hidden, self.dk());
        let Layout { items, n_q, n_k } = cache.layout;
        let scale = T::lit(1.0 / (dk as f64).sqrt());
        let do_ = self.wo.backward(params, grads, &cache.o, dout);

        let mut dq = vec![T::zero(); items * n_q * h];
        let mut dk_ = vec![T::zero(); items * n_k * h];
        let mut dv = vec![T::zero(); items * n_k * h];
        let mut ds = vec![T::zero(); n_q * n_k];
        let mut dp = vec![T::zero(); n_q * n_k];
        for b in (0..items).filter(|&b| cache.gates[b]) {
            for hd in 0..self.heads {
                let qb = gather(&cache.q, b, n_q, hd, dk, h);
                let kb = gather(&cache.k, b, n_k, hd, dk, h);
                let vb = gather(&cache.v, b, n_k, hd, dk, h);
                let dob = gather(&do_, b, n_q, hd, dk, h);
                let p = &cache.probs[(b * self.heads + hd) * n_q * n_k..(b * self.heads + hd + 1) * n_q * n_k];
                matmul_nt(&dob, &vb, &mut dp, n_q, dk, n_k, false);
                let mut dvb = vec![T::zero(); n_k * dk];
                matmul_tn(p, &dob, &mut dvb, n_q, n_k, dk, false);
                softmax_rows_backward(p, &dp, &mut ds, n_k);
                ds.iter_mut().for_each(|v| *v *= scale);
                let mut dqb = vec![T::zero(); n_q * dk];
                matmul(&ds, &kb, &mut dqb, n_q, n_k, dk, false);
                let mut dkb = vec![T::zero(); n_k * dk];
                matmul_tn(&ds, &qb, &mut dkb, n_q, n_k, dk, false);
                scatter_add(&mut dq, &dqb, b, n_q, hd, dk, h);
                scatter_add(&mut dk_, &dkb, b, n_k, hd, dk, h);
                scatter_add(&mut dv, &dvb, b, n_k, hd, dk, h);
            }
        }
        let kv_src = cache.xkv.as_deref().unwrap_or(&cache.xq);
        let mut dxq = self.wq.backward(params, grads, &cache.xq, &dq);
        let mut dxkv = self.wk.backward(params, grads, kv_src, &dk_);
        let dxv = self.wv.backward(params, grads, kv_src, &dv);
        dxkv.iter_mut().zip(&dxv).for_each(|(a, &b)| *a += b);
        if cache.xkv.is_none() {
            dxq.iter_mut().zip(&dxkv).for_each(|(a, &b)| *a += b);
            dxkv.clear();
        }
        (dxq, dxkv)
    }
}
