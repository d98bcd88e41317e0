mod common;

use tsst_core::diffusion::{batch_loss, batch_loss_and_grad, NoiseSchedule};
use tsst_core::encoders::{ContentConfig, Encoder, EncoderKind, StyleConfig};
use tsst_core::numerics::{grad_check, GradCheckConfig, ParamStore, Rng};

#[test]
fn full_model_gradients_match_finite_differences() {
    let model = common::randomized_tiny(5, 0.3);
    let schedule = NoiseSchedule::default_linear(500).unwrap();
    let mut rng = Rng::new(9);
    let items = common::items(32, &mut rng, &schedule);
    let report = grad_check(
        |p| batch_loss(&model.with_params(p.clone()).unwrap(), &schedule, &items).unwrap(),
        |p| {
            let mut g = p.zeros_like();
            batch_loss_and_grad(&model.with_params(p.clone()).unwrap(), &schedule, &items, &mut g).unwrap();
            g
        },
        &model.params,
        GradCheckConfig { samples: 400, ..GradCheckConfig::default() },
        &mut Rng::new(1),
    );
    assert!(report.checked >= 200);
    assert!(report.passed, "{report}");
}

/// Every parameter tensor receives a gradient somewhere in a batch that
/// exercises all dropout combinations.
#[test]
fn every_parameter_gets_gradient() {
    let model = common::randomized_tiny(6, 0.3);
    let schedule = NoiseSchedule::default_linear(500).unwrap();
    let items = common::items(32, &mut Rng::new(2), &schedule);
    let mut g = model.params.zeros_like();
    batch_loss_and_grad(&model, &schedule, &items, &mut g).unwrap();
    for id in g.ids() {
        assert!(g.data(id).iter().any(|v| *v != 0.0), "no gradient reaches `{}`", g.name(id));
    }
}

fn encoder_check(kind: EncoderKind, content: bool) {
    let mut params = ParamStore::<f64>::new();
    let mut rng = Rng::new(3);
    let ccfg = ContentConfig { ds: 8, channels: 3, blocks: 1, kernel: 5 };
    let scfg = StyleConfig { hidden: 3, depth: 2, kernel: 3 };
    let enc = if content {
        Encoder::content(&mut params, kind, &ccfg, &scfg, &mut rng)
    } else {
        Encoder::style(&mut params, kind, &scfg, &mut rng)
    };
    for id in params.ids().collect::<Vec<_>>() {
        for w in params.data_mut(id) {
            *w = 0.5 * rng.normal();
        }
    }
    enc.project(&mut params);
    let x: Vec<f64> = common::sines(27, 0.4);
    let target: Vec<f64> = (0..27).map(|i| (i as f64 * 0.3).cos()).collect();
    let loss = |p: &ParamStore<f64>| {
        let y = enc.encode(p, &x).unwrap();
        y.iter().zip(&target).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
    };
    let report = grad_check(
        loss,
        |p| {
            let (y, cache) = enc.forward(p, &x).unwrap();
            let dy: Vec<f64> = y.iter().zip(&target).map(|(a, b)| 2.0 * (a - b)).collect();
            let mut g = p.zeros_like();
            enc.backward(p, &mut g, &cache, &dy);
            g
        },
        &params,
        GradCheckConfig::default(),
        &mut Rng::new(4),
    );
    assert!(report.passed, "{report}");
}

#[test]
fn content_encoder_gradients() {
    encoder_check(EncoderKind::Specialized, true);
    encoder_check(EncoderKind::PlainConv, true);
}

#[test]
fn style_encoder_gradients() {
    encoder_check(EncoderKind::Specialized, false);
    encoder_check(EncoderKind::PlainConv, false);
}
