//! Conditioning encoders.
//!
//! The content encoder is a learnable low-pass filter: a strided
//! convolution, a convolutional trunk at the reduced rate, a 1×1
//! projection, and linear interpolation back to the input length. The style
//! encoder is a stack of small kernels constrained to be symmetric and to sum
//! to zero, so it has linear phase and annihilates constants exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layers::Conv;
use crate::numerics::conv::{interp_backward, interp_forward};
use crate::numerics::ops::{gelu, gelu_grad};
use crate::numerics::{Padding, ParamStore, Real, Rng};

const CONV_GAIN: f64 = std::f64::consts::SQRT_2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContentConfig {
    /// Downsampling stride.
    pub ds: usize,
    pub channels: usize,
    pub blocks: usize,
    pub kernel: usize,
}

impl Default for ContentConfig {
    fn default() -> Self {
        Self { ds: 8, channels: 128, blocks: 3, kernel: 5 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StyleConfig {
    pub hidden: usize,
    pub depth: usize,
    pub kernel: usize,
}

impl Default for StyleConfig {
    fn default() -> Self {
        Self { hidden: 16, depth: 2, kernel: 3 }
    }
}

/// Which encoder stands behind each condition stream.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncoderKind {
    #[default]
    Specialized,
    /// Unconstrained `[Conv1d(k=3) → GELU] × 2 → 1×1` stack with biases.
    PlainConv,
}

/// Projects one kernel slice onto the symmetric, zero-sum set.
///
/// Symmetrize, subtract the mean, then set the centre tap (or the middle pair
/// for even widths) so the taps sum to exactly zero in floating point. That
/// last step also makes the projection exactly idempotent.
pub fn project_kernel<T: Real>(w: &mut [T]) {
    let k = w.len();
    let half = T::lit(0.5);
    let sym: Vec<T> = (0..k).map(|j| (w[j] + w[k - 1 - j]) * half).collect();
    w.copy_from_slice(&sym);
    let c = k / 2;
    let two = T::lit(2.0);
    let side = |w: &[T]| w[..c].iter().fold(T::zero(), |a, &b| a + b);
    let total = if k % 2 == 1 { two * side(w) + w[c] } else { two * side(w) };
    let mean = total / T::lit(k as f64);
    w.iter_mut().for_each(|v| *v -= mean);
    if k % 2 == 1 {
        w[c] = -(two * side(w));
    } else {
        let rest = w[..c - 1].iter().fold(T::zero(), |a, &b| a + b);
        w[c - 1] = -rest;
        w[c] = -rest;
    }
}

/// Stack of `[Conv → GELU] × depth → 1×1 Conv` at full resolution.
#[derive(Clone, Debug)]
pub struct ConvStack {
    pub layers: Vec<Conv>,
    pub head: Conv,
    /// Symmetric zero-DC kernels, reflect padding, no biases.
    pub constrained: bool,
}

impl ConvStack {
    pub fn new<T: Real>(
        params: &mut ParamStore<T>,
        name: &str,
        cfg: &StyleConfig,
        constrained: bool,
        rng: &mut Rng,
    ) -> Self {
        let (padding, bias) = if constrained { (Padding::Reflect, false) } else { (Padding::Zero, true) };
        let mut layers = Vec::with_capacity(cfg.depth);
        for i in 0..cfg.depth {
            let c_in = if i == 0 { 1 } else { cfg.hidden };
            layers.push(Conv::new(
                params,
                &format!("{name}.conv{i}"),
                c_in,
                cfg.hidden,
                cfg.kernel,
                1,
                padding,
                bias,
                CONV_GAIN,
                rng,
            ));
        }
        let head = Conv::new(params, &format!("{name}.head"), cfg.hidden, 1, 1, 1, Padding::None, bias, 1.0, rng);
        let stack = Self { layers, head, constrained };
        stack.project(params);
        stack
    }

    pub fn min_len(&self) -> usize {
        self.layers.first().map_or(1, |c| c.k)
    }

    pub fn project<T: Real>(&self, params: &mut ParamStore<T>) {
        if !self.constrained {
            return;
        }
        for conv in &self.layers {
            for slice in params.data_mut(conv.w).chunks_exact_mut(conv.k) {
                project_kernel(slice);
            }
        }
    }

    fn forward<T: Real>(&self, params: &ParamStore<T>, x: &[T]) -> (Vec<T>, StackCache<T>) {
        let len = x.len();
        let mut inputs = Vec::with_capacity(self.layers.len() + 1);
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut a = x.to_vec();
        for conv in &self.layers {
            let z = conv.forward(params, &a, len);
            let next: Vec<T> = z.iter().map(|&v| gelu(v)).collect();
            inputs.push(a);
            pre.push(z);
            a = next;
        }
        let out = self.head.forward(params, &a, len);
        inputs.push(a);
        (out, StackCache { inputs, pre, len })
    }

    fn backward<T: Real>(&self, params: &ParamStore<T>, grads: &mut ParamStore<T>, cache: &StackCache<T>, dy: &[T]) {
        let n = self.layers.len();
        let mut da = self.head.backward(params, grads, &cache.inputs[n], cache.len, dy);
        for i in (0..n).rev() {
            let dz: Vec<T> = da.iter().zip(&cache.pre[i]).map(|(&g, &z)| g * gelu_grad(z)).collect();
            da = self.layers[i].backward(params, grads, &cache.inputs[i], cache.len, &dz);
        }
    }
}

#[derive(Clone, Debug)]
struct StackCache<T> {
    inputs: Vec<Vec<T>>,
    pre: Vec<Vec<T>>,
    len: usize,
}

/// Strided-downsample / trunk / project-and-upsample content encoder.
#[derive(Clone, Debug)]
pub struct ContentEncoder {
    pub down: Conv,
    pub trunk: Vec<Conv>,
    pub proj: Conv,
    pub ds: usize,
}

impl ContentEncoder {
    pub fn new<T: Real>(params: &mut ParamStore<T>, name: &str, cfg: &ContentConfig, rng: &mut Rng) -> Self {
        let h = cfg.channels;
        let down = Conv::new(params, &format!("{name}.down"), 1, h, cfg.kernel, cfg.ds, Padding::Zero, true, CONV_GAIN, rng);
        let mut trunk = Vec::with_capacity(2 * cfg.blocks);
        for b in 0..cfg.blocks {
            for j in 0..2 {
                trunk.push(Conv::new(
                    params,
                    &format!("{name}.block{b}.conv{j}"),
                    h,
                    h,
                    cfg.kernel,
                    1,
                    Padding::Zero,
                    true,
                    CONV_GAIN,
                    rng,
                ));
            }
        }
        let proj = Conv::new(params, &format!("{name}.proj"), h, 1, 1, 1, Padding::None, true, 1.0, rng);
        Self { down, trunk, proj, ds: cfg.ds }
    }

    fn forward<T: Real>(&self, params: &ParamStore<T>, x: &[T]) -> (Vec<T>, ContentCache<T>) {
        let len = x.len();
        let padded_len = len.div_ceil(self.ds) * self.ds;
        let mut xp = x.to_vec();
        xp.resize(padded_len, T::zero());

        let z0 = self.down.forward(params, &xp, padded_len);
        let low = z0.len() / self.down.c_out;
        let mut inputs = vec![xp];
        let mut pre = vec![];
        let mut a: Vec<T> = z0.iter().map(|&v| gelu(v)).collect();
        pre.push(z0);
        for conv in &self.trunk {
            let z = conv.forward(params, &a, low);
            let next = z.iter().map(|&v| gelu(v)).collect();
            inputs.push(a);
            pre.push(z);
            a = next;
        }
        let y_low = self.proj.forward(params, &a, low);
        inputs.push(a);
        let up = if low >= 2 { interp_forward(&y_low, padded_len) } else { vec![y_low[0]; padded_len] };
        let out = up[..len].to_vec();
        (out, ContentCache { inputs, pre, padded_len, low })
    }

    fn backward<T: Real>(&self, params: &ParamStore<T>, grads: &mut ParamStore<T>, cache: &ContentCache<T>, dy: &[T]) {
        let mut dup = dy.to_vec();
        dup.resize(cache.padded_len, T::zero());
        let dlow = if cache.low >= 2 {
            interp_backward(cache.low, &dup)
        } else {
            vec![dup.iter().copied().sum::<T>()]
        };
        let n = self.trunk.len();
        let mut da = self.proj.backward(params, grads, &cache.inputs[n + 1], cache.low, &dlow);
        for i in (0..n).rev() {
            let dz: Vec<T> = da.iter().zip(&cache.pre[i + 1]).map(|(&g, &z)| g * gelu_grad(z)).collect();
            da = self.trunk[i].backward(params, grads, &cache.inputs[i + 1], cache.low, &dz);
        }
        let dz: Vec<T> = da.iter().zip(&cache.pre[0]).map(|(&g, &z)| g * gelu_grad(z)).collect();
        self.down.backward(params, grads, &cache.inputs[0], cache.padded_len, &dz);
    }
}

#[derive(Clone, Debug)]
struct ContentCache<T> {
    inputs: Vec<Vec<T>>,
    pre: Vec<Vec<T>>,
    padded_len: usize,
    low: usize,
}

/// A conditioning encoder: series of length `L` in, series of length `L` out.
#[derive(Clone, Debug)]
pub enum Encoder {
    Content(ContentEncoder),
    Stack(ConvStack),
}

/// Saved activations from [`Encoder::forward`].
#[derive(Clone, Debug)]
pub struct EncoderCache<T>(CacheInner<T>);

#[derive(Clone, Debug)]
enum CacheInner<T> {
    Content(ContentCache<T>),
    Stack(StackCache<T>),
}

impl Encoder {
    pub fn content<T: Real>(
        params: &mut ParamStore<T>,
        kind: EncoderKind,
        cfg: &ContentConfig,
        plain: &StyleConfig,
        rng: &mut Rng,
    ) -> Self {
        match kind {
            EncoderKind::Specialized => Encoder::Content(ContentEncoder::new(params, "content", cfg, rng)),
            EncoderKind::PlainConv => Encoder::Stack(ConvStack::new(params, "content", &plain_cfg(plain), false, rng)),
        }
    }

    pub fn style<T: Real>(params: &mut ParamStore<T>, kind: EncoderKind, cfg: &StyleConfig, rng: &mut Rng) -> Self {
        match kind {
            EncoderKind::Specialized => Encoder::Stack(ConvStack::new(params, "style", cfg, true, rng)),
            EncoderKind::PlainConv => Encoder::Stack(ConvStack::new(params, "style", &plain_cfg(cfg), false, rng)),
        }
    }

    pub fn min_len(&self) -> usize {
        match self {
            Encoder::Content(c) => c.ds,
            Encoder::Stack(s) => s.min_len(),
        }
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len < self.min_len() {
            let op = match self {
                Encoder::Content(_) => "encode_content",
                Encoder::Stack(_) => "encode_style",
            };
            return Err(Error::invalid(op, format!("series length {len} is below the minimum {}", self.min_len())));
        }
        Ok(())
    }

    pub fn encode<T: Real>(&self, params: &ParamStore<T>, x: &[T]) -> Result<Vec<T>> {
        Ok(self.forward(params, x)?.0)
    }

    pub fn forward<T: Real>(&self, params: &ParamStore<T>, x: &[T]) -> Result<(Vec<T>, EncoderCache<T>)> {
        self.check_len(x.len())?;
        Ok(match self {
            Encoder::Content(c) => {
                let (y, cache) = c.forward(params, x);
                (y, EncoderCache(CacheInner::Content(cache)))
            }
            Encoder::Stack(s) => {
                let (y, cache) = s.forward(params, x);
                (y, EncoderCache(CacheInner::Stack(cache)))
            }
        })
    }

    pub fn backward<T: Real>(&self, params: &ParamStore<T>, grads: &mut ParamStore<T>, cache: &EncoderCache<T>, dy: &[T]) {
        match (self, &cache.0) {
            (Encoder::Content(c), CacheInner::Content(cache)) => c.backward(params, grads, cache, dy),
            (Encoder::Stack(s), CacheInner::Stack(cache)) => s.backward(params, grads, cache, dy),
            _ => unreachable!("encoder cache from a different encoder"),
        }
    }

    /// Re-applies kernel constraints, if this encoder has any.
    pub fn project<T: Real>(&self, params: &mut ParamStore<T>) {
        if let Encoder::Stack(s) = self {
            s.project(params);
        }
    }
}

fn plain_cfg(cfg: &StyleConfig) -> StyleConfig {
    StyleConfig { kernel: 3, ..cfg.clone() }
}
