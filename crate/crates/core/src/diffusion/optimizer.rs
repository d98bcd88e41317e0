use serde::{Deserialize, Serialize};

use crate::numerics::{ParamStore, Real};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamWConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self { lr: 3e-4, beta1: 0.9, beta2: 0.999, eps: 1e-8, weight_decay: 0.01 }
    }
}

/// Adam with decoupled weight decay. Moments live in parameter-shaped stores
/// so they serialize like the weights.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamW<T> {
    pub cfg: AdamWConfig,
    pub step: u64,
    pub m: ParamStore<T>,
    pub v: ParamStore<T>,
}

impl<T: Real> AdamW<T> {
    pub fn new(cfg: AdamWConfig, params: &ParamStore<T>) -> Self {
        Self { cfg, step: 0, m: params.zeros_like(), v: params.zeros_like() }
    }

    pub fn update(&mut self, params: &mut ParamStore<T>, grads: &ParamStore<T>) {
        self.step += 1;
        let c = &self.cfg;
        let bc1 = 1.0 - c.beta1.powi(self.step as i32);
        let bc2 = 1.0 - c.beta2.powi(self.step as i32);
        let (b1, b2) = (T::lit(c.beta1), T::lit(c.beta2));
        let (one_b1, one_b2) = (T::lit(1.0 - c.beta1), T::lit(1.0 - c.beta2));
        let step_size = T::lit(c.lr / bc1);
        let inv_sqrt_bc2 = T::lit(1.0 / bc2.sqrt());
        let eps = T::lit(c.eps);
        let decay = T::lit(1.0 - c.lr * c.weight_decay);
        for id in params.ids() {
            let g = grads.data(id);
            let m = self.m.data_mut(id);
            m.iter_mut().zip(g).for_each(|(m, &g)| *m = b1 * *m + one_b1 * g);
            let v = self.v.data_mut(id);
            v.iter_mut().zip(g).for_each(|(v, &g)| *v = b2 * *v + one_b2 * g * g);
            let (m, v) = (self.m.data(id), self.v.data(id));
            for ((w, &m), &v) in params.data_mut(id).iter_mut().zip(m).zip(v) {
                *w = *w * decay - step_size * m / ((v.sqrt() * inv_sqrt_bc2) + eps);
            }
        }
    }
}
