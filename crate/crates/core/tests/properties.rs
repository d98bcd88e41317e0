use proptest::prelude::*;

use tsst_core::baselines::{haar_swap, stitch, StitchConfig};
use tsst_core::config::RunConfig;
use tsst_core::data::{decode_checkpoint, encode_checkpoint, normalize, Checkpoint, Dataset, Record};
use tsst_core::diffusion::combine_guidance;
use tsst_core::encoders::project_kernel;
use tsst_core::metrics::{decompose, DecompositionConfig};
use tsst_core::numerics::{Array, ParamStore};
use tsst_core::{Model, ModelConfig};

fn series(min: usize, max: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-50.0f64..50.0, min..max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_is_symmetric_zero_sum_and_idempotent(w in prop::collection::vec(-3.0f64..3.0, 2..12)) {
        let mut p = w.clone();
        project_kernel(&mut p);
        let k = p.len();
        for j in 0..k {
            prop_assert_eq!(p[j], p[k - 1 - j]);
        }
        prop_assert!(p.iter().sum::<f64>().abs() < 1e-12);
        let mut q = p.clone();
        project_kernel(&mut q);
        prop_assert_eq!(p, q);
    }

    #[test]
    fn style_encoder_annihilates_constants(level in -10.0f64..10.0, seed in 0u64..1000, len in 8usize..80) {
        let m = Model::<f64>::new(&ModelConfig::tiny(), seed).unwrap();
        let y = m.encode_style(&vec![level; len]).unwrap();
        prop_assert!(y.iter().all(|v| v.abs() <= 1e-6));
    }

    #[test]
    fn decomposition_telescopes(x in series(16, 300)) {
        let (c, s) = decompose(&x, &DecompositionConfig::default()).unwrap();
        for i in 0..x.len() {
            prop_assert!((c[i] + s[i] - x[i]).abs() <= 1e-12 * x[i].abs().max(1.0));
        }
    }

    #[test]
    fn normalization_output_is_finite(x in prop::collection::vec(prop_oneof![Just(f64::NAN), -1e6f64..1e6], 1..200)) {
        let (z, s) = normalize(&x);
        prop_assert!(z.iter().all(|v| v.is_finite()));
        prop_assert!(s.mean.is_finite() && s.std.is_finite());
    }

    #[test]
    fn guidance_combination_is_affine(
        u in -5.0f64..5.0, c in -5.0f64..5.0, s in -5.0f64..5.0, sc in -1.0f64..3.0, ss in -1.0f64..3.0
    ) {
        let got = combine_guidance(&[u], &[c], &[s], sc, ss)[0];
        let want = (1.0 - sc - ss) * u + sc * c + ss * s;
        prop_assert!((got - want).abs() < 1e-12 * (1.0 + want.abs()) * 10.0);
    }

    #[test]
    fn stitch_of_a_series_with_itself_is_exact(x in series(8, 200)) {
        prop_assert_eq!(stitch(&x, &x, &StitchConfig::default()).unwrap(), x);
    }

    #[test]
    fn haar_swap_with_itself_is_identity(x in series(1, 200), levels in 1usize..5) {
        let y = haar_swap(&x, &x, levels).unwrap();
        for (a, b) in x.iter().zip(&y) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn checkpoint_round_trip(values in prop::collection::vec(any::<f32>(), 1..64), iteration in any::<u64>()) {
        let mut params = ParamStore::new();
        params.add("w", Array::from_vec(&[values.len()], values.clone()).unwrap());
        let ckpt = Checkpoint { iteration, m: params.zeros_like(), v: params.clone(), params };
        let bytes = encode_checkpoint(&ckpt);
        let back = decode_checkpoint(&bytes, std::path::Path::new("mem")).unwrap();
        prop_assert_eq!(encode_checkpoint(&back), bytes);
    }

    #[test]
    fn dataset_text_round_trip(rows in prop::collection::vec(
        ("[a-z][a-z0-9_]{0,8}", prop::collection::vec(prop_oneof![Just(f64::NAN), -1e9f64..1e9], 1..30)), 1..10)
    ) {
        let ds = Dataset::new(rows.into_iter().map(|(id, values)| Record { id, values }).collect());
        let text = ds.to_text();
        prop_assert_eq!(Dataset::parse(&text).unwrap().to_text(), text);
    }
}

#[test]
fn run_config_round_trips() {
    for cfg in [RunConfig::desk(), RunConfig::full()] {
        assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }
    let bad = RunConfig::desk().to_toml().replace("[train]", "[train]\nbogus = 1");
    assert!(RunConfig::from_toml(&bad).is_err());
}
