//! Patchified transformer that predicts the injected noise from a noisy
//! series, a diffusion step and optional content/style conditions.

mod attention;
mod block;
mod embed;

use serde::{Deserialize, Serialize};

pub use attention::{Attention, Layout};
pub use block::{Block, Condition};
pub use embed::{alibi_bias, alibi_slopes, patchify, time_embedding, time_frequencies, unpatchify, Patches};

use crate::error::{Error, Result};
use crate::layers::{LayerNorm, Linear};
use crate::numerics::ops::{silu, silu_grad, LayerNormCache};
use crate::numerics::{ParamStore, Real, Rng};
use block::BlockCache;
use embed::raw_time_embedding;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DenoiserConfig {
    pub hidden: usize,
    pub heads: usize,
    pub layers: usize,
    pub patch: usize,
    pub mlp_ratio: usize,
    /// Content drop probability during training.
    pub p_c: f64,
    /// Style drop probability during training.
    pub p_s: f64,
}

impl Default for DenoiserConfig {
    fn default() -> Self {
        Self { hidden: 256, heads: 4, layers: 4, patch: 8, mlp_ratio: 4, p_c: 0.10, p_s: 0.15 }
    }
}

impl DenoiserConfig {
    pub fn validate(&self) -> Result<()> {
        if self.heads == 0 || self.hidden % self.heads != 0 {
            return Err(Error::Config(format!("hidden {} not divisible by heads {}", self.hidden, self.heads)));
        }
        if self.hidden < 4 || self.hidden % 2 != 0 {
            return Err(Error::Config(format!("hidden must be even and >= 4, got {}", self.hidden)));
        }
        if self.patch == 0 || self.layers == 0 || self.mlp_ratio == 0 {
            return Err(Error::Config("patch, layers and mlp_ratio must be >= 1".into()));
        }
        for (name, p) in [("p_c", self.p_c), ("p_s", self.p_s)] {
            if !(0.0..1.0).contains(&p) {
                return Err(Error::Config(format!("{name} must lie in [0, 1), got {p}")));
            }
        }
        Ok(())
    }

    pub fn slopes(&self) -> Vec<f64> {
        alibi_slopes(self.heads)
    }
}

/// One item of a denoiser batch. `t` is the diffusion step in `1..=T`; the
/// sinusoidal embedding is evaluated at `t − 1`. Conditions are encoder
/// outputs; `None` drops the condition.
#[derive(Clone, Copy, Debug)]
pub struct DenoiserInput<'a, T> {
    pub x_t: &'a [T],
    pub t: usize,
    pub content: Option<&'a [T]>,
    pub style: Option<&'a [T]>,
}

#[derive(Clone, Debug)]
pub struct Denoiser {
    pub cfg: DenoiserConfig,
    pub embed_x: Linear,
    pub embed_content: Linear,
    pub embed_style: Linear,
    pub time_fc1: Linear,
    pub time_fc2: Linear,
    pub blocks: Vec<Block>,
    pub final_ln: LayerNorm,
    pub head: Linear,
    slopes: Vec<f64>,
}

pub struct DenoiserCache<T> {
    len: usize,
    n: usize,
    items: usize,
    px: Vec<T>,
    pc: Vec<T>,
    ps: Vec<T>,
    gates_c: Vec<bool>,
    gates_s: Vec<bool>,
    tau: Vec<T>,
    m1: Vec<T>,
    s1: Vec<T>,
    blocks: Vec<BlockCache<T>>,
    ln_f: LayerNormCache<T>,
    u_f: Vec<T>,
}

/// Gradients flowing back into the condition series of each item.
pub struct ConditionGrads<T> {
    pub content: Vec<Option<Vec<T>>>,
    pub style: Vec<Option<Vec<T>>>,
}

fn stack_patches<T: Real>(series: &[Option<&[T]>], n: usize, p: usize) -> Vec<T> {
    let mut out = vec![T::zero(); series.len() * n * p];
    for (b, s) in series.iter().enumerate() {
        if let Some(s) = s {
            out[b * n * p..b * n * p + s.len()].copy_from_slice(s);
        }
    }
    out
}

impl Denoiser {
    pub fn new<T: Real>(params: &mut ParamStore<T>, cfg: &DenoiserConfig, rng: &mut Rng) -> Result<Self> {
        cfg.validate()?;
        let (h, p) = (cfg.hidden, cfg.patch);
        let embed_x = Linear::new(params, "denoiser.embed_x", p, h, true, 1.0, rng);
        let embed_content = Linear::new(params, "denoiser.embed_content", p, h, true, 1.0, rng);
        let embed_style = Linear::new(params, "denoiser.embed_style", p, h, true, 1.0, rng);
        let time_fc1 = Linear::new(params, "denoiser.time_fc1", h, h, true, 1.0, rng);
        let time_fc2 = Linear::new(params, "denoiser.time_fc2", h, h, true, 1.0, rng);
        let blocks = (0..cfg.layers)
            .map(|i| Block::new(params, &format!("denoiser.block{i}"), h, cfg.heads, cfg.mlp_ratio, rng))
            .collect();
        let final_ln = LayerNorm::new(params, "denoiser.final_ln", h);
        let head = Linear::new(params, "denoiser.head", h, p, true, 0.0, rng);
        Ok(Self {
            cfg: cfg.clone(),
            embed_x,
            embed_content,
            embed_style,
            time_fc1,
            time_fc2,
            blocks,
            final_ln,
            head,
            slopes: cfg.slopes(),
        })
    }

    fn validate<T: Real>(items: &[DenoiserInput<T>]) -> Result<usize> {
        let first = items.first().ok_or_else(|| Error::invalid("predict_noise", "empty batch"))?;
        let len = first.x_t.len();
        if len == 0 {
            return Err(Error::invalid("predict_noise", "empty series"));
        }
        for (i, it) in items.iter().enumerate() {
            if it.x_t.len() != len {
                return Err(Error::shape("predict_noise", format!("item {i} has length {}, batch uses {len}", it.x_t.len())));
            }
            if it.t == 0 {
                return Err(Error::invalid("predict_noise", format!("item {i}: step t must be >= 1")));
            }
            for (what, c) in [("content", it.content), ("style", it.style)] {
                if let Some(c) = c {
                    if c.len() != len {
                        return Err(Error::shape(
                            "predict_noise",
                            format!("item {i}: {what} condition has length {} but x_t has {len}", c.len()),
                        ));
                    }
                }
            }
        }
        Ok(len)
    }

    fn embed_condition<T: Real>(&self, params: &ParamStore<T>, layer: &Linear, patches: &[T], gates: &[bool], n: usize) -> Vec<T> {
        let h = self.cfg.hidden;
        if !gates.iter().any(|&g| g) {
            return vec![T::zero(); gates.len() * n * h];
        }
        let mut e = layer.forward(params, patches);
        for (b, &on) in gates.iter().enumerate() {
            if !on {
                e[b * n * h..(b + 1) * n * h].iter_mut().for_each(|v| *v = T::zero());
            }
        }
        e
    }

    /// Batched forward pass; every item must share one length.
    pub fn forward<T: Real>(&self, params: &ParamStore<T>, items: &[DenoiserInput<T>]) -> Result<(Vec<Vec<T>>, DenoiserCache<T>)> {
        let len = Self::validate(items)?;
        let (h, p) = (self.cfg.hidden, self.cfg.patch);
        let n = len.div_ceil(p);
        let bsz = items.len();
        let layout = Layout { items: bsz, n_q: n, n_k: n };

        let px = stack_patches(&items.iter().map(|it| Some(it.x_t)).collect::<Vec<_>>(), n, p);
        let contents: Vec<Option<&[T]>> = items.iter().map(|it| it.content).collect();
        let styles: Vec<Option<&[T]>> = items.iter().map(|it| it.style).collect();
        let gates_c: Vec<bool> = contents.iter().map(Option::is_some).collect();
        let gates_s: Vec<bool> = styles.iter().map(Option::is_some).collect();
        let pc = stack_patches(&contents, n, p);
        let ps = stack_patches(&styles, n, p);

        let mut x = self.embed_x.forward(params, &px);
        let mut tau = Vec::with_capacity(bsz * h);
        for it in items {
            tau.extend(raw_time_embedding::<T>(it.t - 1, h));
        }
        let m1 = self.time_fc1.forward(params, &tau);
        let s1: Vec<T> = m1.iter().map(|&v| silu(v)).collect();
        let temb = self.time_fc2.forward(params, &s1);
        for b in 0..bsz {
            let te = &temb[b * h..(b + 1) * h];
            for row in x[b * n * h..(b + 1) * n * h].chunks_exact_mut(h) {
                row.iter_mut().zip(te).for_each(|(a, &t)| *a += t);
            }
        }

        let ec = self.embed_condition(params, &self.embed_content, &pc, &gates_c, n);
        let es = self.embed_condition(params, &self.embed_style, &ps, &gates_s, n);
        let content = Condition { tokens: &ec, gates: &gates_c };
        let style = Condition { tokens: &es, gates: &gates_s };

        let mut caches = Vec::with_capacity(self.blocks.len());
        for blk in &self.blocks {
            let (y, c) = blk.forward(params, &x, &content, &style, layout, &self.slopes);
            caches.push(c);
            x = y;
        }
        let (u_f, ln_f) = self.final_ln.forward(params, &x);
        let out = self.head.forward(params, &u_f);
        let eps = (0..bsz).map(|b| out[b * n * p..b * n * p + len].to_vec()).collect();
        let cache = DenoiserCache {
            len,
            n,
            items: bsz,
            px,
            pc,
            ps,
            gates_c,
            gates_s,
            tau,
            m1,
            s1,
            blocks: caches,
            ln_f,
            u_f,
        };
        Ok((eps, cache))
    }

    /// Noise estimates without keeping activations.
    pub fn predict<T: Real>(&self, params: &ParamStore<T>, items: &[DenoiserInput<T>]) -> Result<Vec<Vec<T>>> {
        Ok(self.forward(params, items)?.0)
    }

    /// Accumulates parameter gradients for `d_eps` (one slice per item) and
    /// returns the gradients with respect to the condition series.
    pub fn backward<T: Real>(
        &self,
        params: &ParamStore<T>,
        grads: &mut ParamStore<T>,
        cache: &DenoiserCache<T>,
        d_eps: &[Vec<T>],
    ) -> ConditionGrads<T> {
        let (h, p) = (self.cfg.hidden, self.cfg.patch);
        let (n, bsz, len) = (cache.n, cache.items, cache.len);
        let mut dout = vec![T::zero(); bsz * n * p];
        for (b, d) in d_eps.iter().enumerate() {
            dout[b * n * p..b * n * p + len].copy_from_slice(d);
        }
        let du = self.head.backward(params, grads, &cache.u_f, &dout);
        let mut dx = self.final_ln.backward(params, grads, &cache.ln_f, &du);

        let mut dec = vec![T::zero(); bsz * n * h];
        let mut des = vec![T::zero(); bsz * n * h];
        for (blk, c) in self.blocks.iter().zip(&cache.blocks).rev() {
            dx = blk.backward(params, grads, c, &dx, &mut dec, &mut des);
        }

        let mut dtemb = vec![T::zero(); bsz * h];
        for b in 0..bsz {
            let acc = &mut dtemb[b * h..(b + 1) * h];
            for row in dx[b * n * h..(b + 1) * n * h].chunks_exact(h) {
                acc.iter_mut().zip(row).for_each(|(a, &v)| *a += v);
            }
        }
        let ds1 = self.time_fc2.backward(params, grads, &cache.s1, &dtemb);
        let dm1: Vec<T> = ds1.iter().zip(&cache.m1).map(|(&g, &m)| g * silu_grad(m)).collect();
        self.time_fc1.backward(params, grads, &cache.tau, &dm1);
        self.embed_x.backward(params, grads, &cache.px, &dx);

        let mut split = |layer: &Linear, patches: &[T], gates: &[bool], dtok: &mut Vec<T>| -> Vec<Option<Vec<T>>> {
            if !gates.iter().any(|&g| g) {
                return vec![None; bsz];
            }
            for (b, &on) in gates.iter().enumerate() {
                if !on {
                    dtok[b * n * h..(b + 1) * n * h].iter_mut().for_each(|v| *v = T::zero());
                }
            }
            let dpatch = layer.backward(params, grads, patches, dtok);
            gates
                .iter()
                .enumerate()
                .map(|(b, &on)| on.then(|| dpatch[b * n * p..b * n * p + len].to_vec()))
                .collect()
        };
        let content = split(&self.embed_content, &cache.pc, &cache.gates_c, &mut dec);
        let style = split(&self.embed_style, &cache.ps, &cache.gates_s, &mut des);
        ConditionGrads { content, style }
    }
}
