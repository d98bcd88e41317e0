#![allow(dead_code)]

use tsst_core::diffusion::{NoiseSchedule, TrainItem};
use tsst_core::numerics::{ParamStore, Rng};
use tsst_core::{Model, ModelConfig};

/// Tiny fp64 model with every weight redrawn from N(0, scale²) and kernel
/// constraints re-applied, so no gradient path is masked by zero init.
pub fn randomized_tiny(seed: u64, scale: f64) -> Model<f64> {
    let mut model = Model::<f64>::new(&ModelConfig::tiny(), seed).unwrap();
    let mut rng = Rng::new(seed ^ 0xfeed);
    for id in model.params.ids().collect::<Vec<_>>() {
        let is_gain = model.params.name(id).ends_with(".gain");
        for w in model.params.data_mut(id) {
            *w = if is_gain { 1.0 + scale * rng.normal() } else { scale * rng.normal() };
        }
    }
    model.project_constraints();
    model
}

pub fn sines(len: usize, phase: f64) -> Vec<f64> {
    (0..len)
        .map(|t| {
            let u = t as f64 / len as f64;
            (6.28 * 2.0 * u + phase).sin() + 0.3 * (6.28 * 11.0 * u).sin() + 0.5 * u
        })
        .collect()
}

/// Batch covering every dropout combination.
pub fn items(len: usize, rng: &mut Rng, schedule: &NoiseSchedule) -> Vec<TrainItem<f64>> {
    [(true, true), (false, true), (true, false), (false, false)]
        .iter()
        .enumerate()
        .map(|(i, &(keep_content, keep_style))| TrainItem {
            x0: tsst_core::data::normalize(&sines(len, i as f64)).0,
            t: 1 + rng.below(schedule.steps() as u64) as usize,
            eps: rng.normal_vec(len),
            keep_content,
            keep_style,
        })
        .collect()
}

pub fn max_abs_diff(a: &ParamStore<f32>, b: &ParamStore<f32>) -> f32 {
    a.ids()
        .flat_map(|id| a.data(id).iter().zip(b.data(id)).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f32::max)
}
