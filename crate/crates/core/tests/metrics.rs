use tsst_core::baselines::{stitch, StitchConfig};
use tsst_core::data::normalize;
use tsst_core::metrics::{
    cp, decompose, evaluate, pca_spread_vectors, rm, si, stat_features, DecompositionConfig, Embedding, StatEmbedding,
    STAT_DIM,
};
use tsst_core::numerics::Rng;

fn random_series(rng: &mut Rng, len: usize) -> Vec<f64> {
    let mut level = 0.0;
    normalize(
        &(0..len)
            .map(|_| {
                level += 0.3 * rng.normal();
                level + 0.5 * rng.normal()
            })
            .collect::<Vec<_>>(),
    )
    .0
}

/// Direct loop transcription of the smoothing cascade with mirrored edges.
fn loop_decompose(x: &[f64], kernels: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let n = x.len() as i64;
    let mut smooth = x.to_vec();
    let mut resid_sum = vec![0.0; x.len()];
    for &k in kernels {
        let h = (k / 2) as i64;
        let mut next = vec![0.0; x.len()];
        for i in 0..n {
            let mut acc = 0.0;
            for j in i - h..=i + h {
                let jj = if j < 0 { -j } else if j >= n { 2 * n - 2 - j } else { j };
                acc += smooth[jj as usize];
            }
            next[i as usize] = acc / k as f64;
        }
        for i in 0..x.len() {
            resid_sum[i] += smooth[i] - next[i];
        }
        smooth = next;
    }
    (smooth, resid_sum)
}

#[test]
fn decomposition_matches_loop_oracle() {
    let cfg = DecompositionConfig::default();
    let mut rng = Rng::new(1);
    for len in [16, 64, 200] {
        let x = random_series(&mut rng, len);
        let (c, s) = decompose(&x, &cfg).unwrap();
        let (c2, s2) = loop_decompose(&x, &[3, 5, 15]);
        for i in 0..len {
            assert!((c[i] - c2[i]).abs() < 1e-12 && (s[i] - s2[i]).abs() < 1e-12);
        }
    }
}

#[test]
fn constant_series_has_no_style() {
    let (c, s) = decompose(&[2.5; 40], &DecompositionConfig::default()).unwrap();
    assert!(c.iter().all(|v| (v - 2.5).abs() < 1e-12));
    assert!(s.iter().all(|v| v.abs() < 1e-12));
}

#[test]
fn decompose_rejects_short_and_bad_kernels() {
    assert!(decompose(&[0.0; 15], &DecompositionConfig::default()).is_err());
    assert!(decompose(&[0.0; 40], &DecompositionConfig { kernels: vec![5, 3] }).is_err());
    assert!(decompose(&[0.0; 40], &DecompositionConfig { kernels: vec![4] }).is_err());
}

#[test]
fn identity_scores_are_zero() {
    let cfg = DecompositionConfig::default();
    let x = random_series(&mut Rng::new(2), 128);
    assert_eq!(cp(&x, &x, &cfg).unwrap(), 0.0);
    assert_eq!(si(&x, &x, &cfg).unwrap(), 0.0);
    assert_eq!(rm(&x, &x, &x, StatEmbedding::reference(), &cfg).unwrap(), 0.0);
}

#[test]
fn length_mismatch_is_an_error() {
    let cfg = DecompositionConfig::default();
    let x = random_series(&mut Rng::new(2), 64);
    assert!(cp(&x, &x[..32], &cfg).is_err());
}

#[test]
fn stitch_output_preserves_content_better_than_style_source() {
    let cfg = DecompositionConfig::default();
    let mut rng = Rng::new(3);
    for _ in 0..20 {
        let a = random_series(&mut rng, 128);
        let b = random_series(&mut rng, 128);
        let x = normalize(&stitch(&a, &b, &StitchConfig::default()).unwrap()).0;
        assert!(cp(&x, &a, &cfg).unwrap() < cp(&b, &a, &cfg).unwrap());
    }
}

#[test]
fn style_score_grows_with_added_noise() {
    let cfg = DecompositionConfig::default();
    let mut rng = Rng::new(4);
    let a = random_series(&mut rng, 256);
    let noise: Vec<f64> = rng.normal_vec(256);
    let mut prev = -1.0;
    for delta in [0.0, 0.1, 0.5, 1.0] {
        let x = normalize(&a.iter().zip(&noise).map(|(a, n)| a + delta * n).collect::<Vec<_>>()).0;
        let s = si(&x, &a, &cfg).unwrap();
        assert!(s > prev, "delta {delta}: {s} <= {prev}");
        prev = s;
    }
}

#[test]
fn rm_matches_direct_formula() {
    let cfg = DecompositionConfig::default();
    let emb = StatEmbedding::reference();
    let mut rng = Rng::new(5);
    let (x, a, b) = (random_series(&mut rng, 128), random_series(&mut rng, 128), random_series(&mut rng, 128));
    let mse = |p: &[f64], q: &[f64]| p.iter().zip(q).map(|(u, v)| (u - v).powi(2)).sum::<f64>() / p.len() as f64;
    let (cx, sx) = loop_decompose(&x, &[3, 5, 15]);
    let (ca, _) = loop_decompose(&a, &[3, 5, 15]);
    let (_, sb) = loop_decompose(&b, &[3, 5, 15]);
    let want = 0.5 * (mse(&emb.embed(&cx), &emb.embed(&ca)) + mse(&emb.embed(&sx), &emb.embed(&sb)));
    assert!((rm(&x, &a, &b, emb, &cfg).unwrap() - want).abs() < 1e-12);
}

#[test]
fn report_overall_is_row_mean() {
    let mut rng = Rng::new(6);
    let series: Vec<Vec<f64>> = (0..9).map(|_| random_series(&mut rng, 64)).collect();
    let triples: Vec<(&[f64], &[f64], &[f64])> =
        series.chunks(3).map(|c| (c[0].as_slice(), c[1].as_slice(), c[2].as_slice())).collect();
    let r = evaluate(&triples, StatEmbedding::reference(), &DecompositionConfig::default()).unwrap();
    for p in &r.pairs {
        assert!((p.overall - (p.cp + p.si + p.rm) / 3.0).abs() < 1e-12);
    }
    let same: Vec<(&[f64], &[f64], &[f64])> = vec![(&series[0], &series[0], &series[0])];
    let z = evaluate(&same, StatEmbedding::reference(), &DecompositionConfig::default()).unwrap();
    assert_eq!((z.cp.mean, z.si.mean, z.rm.mean), (0.0, 0.0, 0.0));
}

#[test]
fn embedding_has_fixed_length_and_is_deterministic() {
    let x = random_series(&mut Rng::new(7), 100);
    assert_eq!(stat_features(&x).len(), STAT_DIM);
    let e = StatEmbedding::reference();
    assert_eq!(e.embed(&x), e.embed(&x));
    assert_eq!(e.embed(&x[..20]).len(), STAT_DIM);
}

#[test]
fn pca_of_identical_samples_has_zero_dispersion() {
    let v = vec![vec![1.0, 2.0, 3.0]; 5];
    let p = pca_spread_vectors(&v).unwrap();
    assert_eq!(p.dispersion, 0.0);
    assert!(p.points.iter().all(|q| q == &[0.0, 0.0]));
}

#[test]
fn pca_of_two_clusters_aligns_with_separation() {
    let mut v = Vec::new();
    for i in 0..10 {
        let s = if i % 2 == 0 { 1.0 } else { -1.0 };
        v.push(vec![s, 0.0, 0.0, 0.0]);
    }
    let p = pca_spread_vectors(&v).unwrap();
    assert!((p.axes[0][0].abs() - 1.0).abs() < 1e-12);
    assert!((p.dispersion - 1.0).abs() < 1e-12);
    assert!(pca_spread_vectors(&v[..2]).is_err());
}
