//! One denoising block: self-attention, content cross-attention, style
//! cross-attention and a position-wise MLP, each pre-normalized and wrapped
//! in a residual connection.

use crate::denoiser::attention::{AttnCache, Attention, Layout};
use crate::layers::{LayerNorm, Linear};
use crate::numerics::ops::{gelu, gelu_grad, LayerNormCache};
use crate::numerics::{ParamStore, Real, Rng};

#[derive(Clone, Debug)]
pub struct Block {
    pub ln_self: LayerNorm,
    pub self_attn: Attention,
    pub ln_content: LayerNorm,
    pub content_attn: Attention,
    pub ln_style: LayerNorm,
    pub style_attn: Attention,
    pub ln_mlp: LayerNorm,
    pub fc1: Linear,
    pub fc2: Linear,
}

/// Condition tokens and per-item presence flags for one stream.
pub struct Condition<'a, T> {
    pub tokens: &'a [T],
    pub gates: &'a [bool],
}

pub struct BlockCache<T> {
    ln1: LayerNormCache<T>,
    sa: AttnCache<T>,
    ln2: Option<LayerNormCache<T>>,
    ca_c: Option<AttnCache<T>>,
    ln3: Option<LayerNormCache<T>>,
    ca_s: Option<AttnCache<T>>,
    ln4: LayerNormCache<T>,
    u4: Vec<T>,
    z: Vec<T>,
    g: Vec<T>,
}

impl Block {
    pub fn new<T: Real>(
        params: &mut ParamStore<T>,
        name: &str,
        hidden: usize,
        heads: usize,
        mlp_ratio: usize,
        rng: &mut Rng,
    ) -> Self {
        Self {
            ln_self: LayerNorm::new(params, &format!("{name}.ln_self"), hidden),
            self_attn: Attention::new(params, &format!("{name}.self"), hidden, heads, rng),
            ln_content: LayerNorm::new(params, &format!("{name}.ln_content"), hidden),
            content_attn: Attention::new(params, &format!("{name}.content"), hidden, heads, rng),
            ln_style: LayerNorm::new(params, &format!("{name}.ln_style"), hidden),
            style_attn: Attention::new(params, &format!("{name}.style"), hidden, heads, rng),
            ln_mlp: LayerNorm::new(params, &format!("{name}.ln_mlp"), hidden),
            fc1: Linear::new(params, &format!("{name}.fc1"), hidden, mlp_ratio * hidden, true, std::f64::consts::SQRT_2, rng),
            fc2: Linear::new(params, &format!("{name}.fc2"), mlp_ratio * hidden, hidden, true, 1.0, rng),
        }
    }

    fn cross<T: Real>(
        params: &ParamStore<T>,
        ln: &LayerNorm,
        attn: &Attention,
        x: &mut [T],
        cond: &Condition<T>,
        layout: Layout,
        slopes: &[f64],
    ) -> (Option<LayerNormCache<T>>, Option<AttnCache<T>>) {
        if !cond.gates.iter().any(|&g| g) {
            return (None, None);
        }
        let (u, lc) = ln.forward(params, x);
        let (a, ac) = attn.forward(params, &u, Some(cond.tokens), layout, slopes, cond.gates);
        x.iter_mut().zip(&a).for_each(|(xi, &ai)| *xi += ai);
        (Some(lc), Some(ac))
    }

    pub fn forward<T: Real>(
        &self,
        params: &ParamStore<T>,
        x: &[T],
        content: &Condition<T>,
        style: &Condition<T>,
        layout: Layout,
        slopes: &[f64],
    ) -> (Vec<T>, BlockCache<T>) {
        let all_on = vec![true; layout.items];
        let self_layout = Layout { n_k: layout.n_q, ..layout };
        let (u1, ln1) = self.ln_self.forward(params, x);
        let (a1, sa) = self.self_attn.forward(params, &u1, None, self_layout, slopes, &all_on);
        let mut h: Vec<T> = x.iter().zip(&a1).map(|(&a, &b)| a + b).collect();

        let (ln2, ca_c) = Self::cross(params, &self.ln_content, &self.content_attn, &mut h, content, layout, slopes);
        let (ln3, ca_s) = Self::cross(params, &self.ln_style, &self.style_attn, &mut h, style, layout, slopes);

        let (u4, ln4) = self.ln_mlp.forward(params, &h);
        let z = self.fc1.forward(params, &u4);
        let g: Vec<T> = z.iter().map(|&v| gelu(v)).collect();
        let m = self.fc2.forward(params, &g);
        h.iter_mut().zip(&m).for_each(|(a, &b)| *a += b);
        (h, BlockCache { ln1, sa, ln2, ca_c, ln3, ca_s, ln4, u4, z, g })
    }

    /// Returns `dx`; accumulates condition-token gradients into `dcontent`
    /// and `dstyle`.
    pub fn backward<T: Real>(
        &self,
        params: &ParamStore<T>,
        grads: &mut ParamStore<T>,
        cache: &BlockCache<T>,
        dout: &[T],
        dcontent: &mut [T],
        dstyle: &mut [T],
    ) -> Vec<T> {
        let mut dh = dout.to_vec();

        let dg = self.fc2.backward(params, grads, &cache.g, dout);
        let dz: Vec<T> = dg.iter().zip(&cache.z).map(|(&a, &z)| a * gelu_grad(z)).collect();
        let du4 = self.fc1.backward(params, grads, &cache.u4, &dz);
        let d = self.ln_mlp.backward(params, grads, &cache.ln4, &du4);
        dh.iter_mut().zip(&d).for_each(|(a, &b)| *a += b);

        for (ln, attn, lc, ac, dcond) in [
            (&self.ln_style, &self.style_attn, &cache.ln3, &cache.ca_s, &mut *dstyle),
            (&self.ln_content, &self.content_attn, &cache.ln2, &cache.ca_c, &mut *dcontent),
        ] {
            if let (Some(lc), Some(ac)) = (lc, ac) {
                let (du, dc) = attn.backward(params, grads, ac, &dh);
                dcond.iter_mut().zip(&dc).for_each(|(a, &b)| *a += b);
                let d = ln.backward(params, grads, lc, &du);
                dh.iter_mut().zip(&d).for_each(|(a, &b)| *a += b);
            }
        }

        let (du1, _) = self.self_attn.backward(params, grads, &cache.sa, &dh);
        let d = self.ln_self.backward(params, grads, &cache.ln1, &du1);
        dh.iter_mut().zip(&d).for_each(|(a, &b)| *a += b);
        dh
    }
}
