//! Noise-prediction objective with condition dropout.

use crate::denoiser::DenoiserInput;
use crate::diffusion::schedule::{forward_noise, NoiseSchedule};
use crate::encoders::EncoderCache;
use crate::error::{Error, Result};
use crate::model::Model;
use crate::numerics::{ParamStore, Real};

/// One fully specified training example: clean window, step, noise draw and
/// which conditions survive dropout. Both conditions are encoded from `x0`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainItem<T> {
    pub x0: Vec<T>,
    pub t: usize,
    pub eps: Vec<T>,
    pub keep_content: bool,
    pub keep_style: bool,
}

struct Encoded<T> {
    xt: Vec<Vec<T>>,
    content: Vec<Option<(Vec<T>, EncoderCache<T>)>>,
    style: Vec<Option<(Vec<T>, EncoderCache<T>)>>,
}

fn encode_batch<T: Real>(model: &Model<T>, schedule: &NoiseSchedule, items: &[TrainItem<T>]) -> Result<Encoded<T>> {
    if items.is_empty() {
        return Err(Error::invalid("train_step", "empty batch"));
    }
    let mut enc = Encoded { xt: vec![], content: vec![], style: vec![] };
    for it in items {
        enc.xt.push(forward_noise(schedule, &it.x0, it.t, &it.eps)?);
        enc.content.push(if it.keep_content { Some(model.content.forward(&model.params, &it.x0)?) } else { None });
        enc.style.push(if it.keep_style { Some(model.style.forward(&model.params, &it.x0)?) } else { None });
    }
    Ok(enc)
}

fn inputs<'a, T: Real>(items: &[TrainItem<T>], enc: &'a Encoded<T>) -> Vec<DenoiserInput<'a, T>> {
    items
        .iter()
        .enumerate()
        .map(|(i, it)| DenoiserInput {
            x_t: &enc.xt[i],
            t: it.t,
            content: enc.content[i].as_ref().map(|c| c.0.as_slice()),
            style: enc.style[i].as_ref().map(|c| c.0.as_slice()),
        })
        .collect()
}

fn mse<T: Real>(pred: &[Vec<T>], items: &[TrainItem<T>]) -> (T, usize) {
    let mut sum = T::zero();
    let mut count = 0;
    for (p, it) in pred.iter().zip(items) {
        for (&a, &b) in p.iter().zip(&it.eps) {
            sum += (a - b) * (a - b);
        }
        count += p.len();
    }
    (sum / T::lit(count as f64), count)
}

/// Mean squared noise error over every sample of the batch.
pub fn batch_loss<T: Real>(model: &Model<T>, schedule: &NoiseSchedule, items: &[TrainItem<T>]) -> Result<T> {
    let enc = encode_batch(model, schedule, items)?;
    let pred = model.denoiser.predict(&model.params, &inputs(items, &enc))?;
    Ok(mse(&pred, items).0)
}

/// Loss plus gradients for every parameter, accumulated into `grads`.
pub fn batch_loss_and_grad<T: Real>(
    model: &Model<T>,
    schedule: &NoiseSchedule,
    items: &[TrainItem<T>],
    grads: &mut ParamStore<T>,
) -> Result<T> {
    let enc = encode_batch(model, schedule, items)?;
    let (pred, cache) = model.denoiser.forward(&model.params, &inputs(items, &enc))?;
    let (loss, count) = mse(&pred, items);
    let scale = T::lit(2.0 / count as f64);
    let d_eps: Vec<Vec<T>> = pred
        .iter()
        .zip(items)
        .map(|(p, it)| p.iter().zip(&it.eps).map(|(&a, &b)| scale * (a - b)).collect())
        .collect();
    let cond = model.denoiser.backward(&model.params, grads, &cache, &d_eps);
    for (i, dc) in cond.content.iter().enumerate() {
        if let (Some(dc), Some((_, c))) = (dc, &enc.content[i]) {
            model.content.backward(&model.params, grads, c, dc);
        }
    }
    for (i, ds) in cond.style.iter().enumerate() {
        if let (Some(ds), Some((_, c))) = (ds, &enc.style[i]) {
            model.style.backward(&model.params, grads, c, ds);
        }
    }
    Ok(loss)
}
