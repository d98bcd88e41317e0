//! Acceptance run: one line per criterion, tolerances pinned below.
//! Failures are reported but only fail the process when
//! `ACCEPTANCE_STRICT=1`, so the remaining test targets still run.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use tsst_core::baselines::{haar_forward, haar_inverse, nst_default, stitch, NstConfig, StitchConfig};
use tsst_core::data::{generate_synthetic, normalize, save_checkpoint, load_checkpoint, SyntheticSpec, WindowSampler, WindowSpec};
use tsst_core::diffusion::{
    batch_loss, batch_loss_and_grad, sample_batch, sample_unconditional, GuidanceConfig, NoiseSchedule, Pair, TrainConfig,
    TrainItem, Trainer,
};
use tsst_core::experiments::{length_sweep, score, temperature_sweep, transfer, transfer_pairs, TransferPair};
use tsst_core::metrics::{decompose, DecompositionConfig, StatEmbedding};
use tsst_core::numerics::{grad_check, GradCheckConfig, Rng};
use tsst_core::{Model, ModelConfig};

const GRAD_SAMPLES: usize = 400;
const GRAD_MIN_CHECKED: usize = 200;
const GRAD_RTOL: f64 = 1e-4;
const GRAD_BUDGET: Duration = Duration::from_secs(120);

const DECOMP_TOL: f64 = 1e-12;
const DECOMP_BUDGET: Duration = Duration::from_secs(10);

const CONSTRAINT_TOL: f64 = 1e-6;
const CONSTRAINT_STEPS: u64 = 500;
const CONSTRAINT_BUDGET: Duration = Duration::from_secs(60);

const SCHEDULE_TOL: f64 = 1e-12;

const COLLAPSE_SEEDS: u64 = 10;

const DISPERSION_REPEATS: usize = 20;
const DISPERSION_TEMPS: [f64; 4] = [0.0, 0.25, 0.5, 1.0];

const TOY_ITERATIONS: u64 = 5000;
const TOY_SERIES: usize = 2000;
const LOSS_RATIO: f64 = 0.5;
const TRAIN_BUDGET: Duration = Duration::from_secs(30 * 60);

const HELD_OUT_PAIRS: usize = 50;
const HELD_OUT_LEN: usize = 128;
const HELD_OUT_SEED: u64 = 777;
const SAMPLE_SEED: u64 = 1;

const LENGTHS: [usize; 5] = [128, 256, 512, 1024, 2048];
const LENGTH_PAIRS: usize = 12;
const LENGTH_FACTOR: f64 = 3.0;

const HAAR_TOL: f64 = 1e-9;

const RESUME_SPLIT: u64 = 50;

type Outcome = Result<String, String>;

struct Toy {
    trainer: Trainer,
    first_decile: f64,
    last_decile: f64,
    elapsed: Duration,
}

fn toy() -> &'static Toy {
    static TOY: OnceLock<Toy> = OnceLock::new();
    TOY.get_or_init(|| {
        let t0 = Instant::now();
        let data = generate_synthetic(&SyntheticSpec { count: TOY_SERIES, ..SyntheticSpec::default() }).unwrap();
        let windows = WindowSampler::new(&data, WindowSpec::default()).unwrap();
        let cfg = TrainConfig { iterations: TOY_ITERATIONS, ..TrainConfig::default() };
        let mut trainer = Trainer::new(&ModelConfig::desk(), cfg).unwrap();
        let losses = trainer
            .run(&windows, None, None, |i, l| {
                if i % 500 == 0 {
                    eprintln!("  toy training {i}/{TOY_ITERATIONS}  loss {l:.4}  {:.0?}", t0.elapsed());
                }
            })
            .unwrap();
        let n = losses.len() / 10;
        let mean = |s: &[(u64, f64)]| s.iter().map(|x| x.1).sum::<f64>() / s.len() as f64;
        Toy {
            first_decile: mean(&losses[..n]),
            last_decile: mean(&losses[losses.len() - n..]),
            elapsed: t0.elapsed(),
            trainer,
        }
    })
}

fn held_out() -> &'static [TransferPair] {
    static PAIRS: OnceLock<Vec<TransferPair>> = OnceLock::new();
    PAIRS.get_or_init(|| transfer_pairs(HELD_OUT_PAIRS, HELD_OUT_LEN, HELD_OUT_SEED, &Default::default()))
}

/// Mean (CP, SI) of the toy model's outputs on the held-out pairs.
fn transfer_scores(sc: f64, ss: f64) -> (f64, f64) {
    let t = &toy().trainer;
    let out = transfer(&t.model, held_out(), &t.schedule, &GuidanceConfig::new(sc, ss, 1.0), SAMPLE_SEED).unwrap();
    let r = score(&out, held_out(), StatEmbedding::reference()).unwrap();
    (r.cp.mean, r.si.mean)
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn sines(len: usize, phase: f64) -> Vec<f64> {
    (0..len)
        .map(|t| {
            let u = t as f64 / len as f64;
            (6.28 * 2.0 * u + phase).sin() + 0.3 * (6.28 * 11.0 * u).sin() + 0.5 * u
        })
        .collect()
}

fn gradient_fidelity() -> Outcome {
    let t0 = Instant::now();
    let mut model = Model::<f64>::new(&ModelConfig::tiny(), 5).unwrap();
    let mut rng = Rng::new(0xfeed);
    for id in model.params.ids().collect::<Vec<_>>() {
        let gain = model.params.name(id).ends_with(".gain");
        for w in model.params.data_mut(id) {
            *w = if gain { 1.0 + 0.3 * rng.normal() } else { 0.3 * rng.normal() };
        }
    }
    model.project_constraints();
    let schedule = NoiseSchedule::default_linear(500).unwrap();
    let mut rng = Rng::new(9);
    let items: Vec<TrainItem<f64>> = [(true, true), (false, true), (true, false), (false, false)]
        .iter()
        .enumerate()
        .map(|(i, &(keep_content, keep_style))| TrainItem {
            x0: normalize(&sines(32, i as f64)).0,
            t: 1 + rng.below(500) as usize,
            eps: rng.normal_vec(32),
            keep_content,
            keep_style,
        })
        .collect();
    let report = grad_check(
        |p| batch_loss(&model.with_params(p.clone()).unwrap(), &schedule, &items).unwrap(),
        |p| {
            let mut g = p.zeros_like();
            batch_loss_and_grad(&model.with_params(p.clone()).unwrap(), &schedule, &items, &mut g).unwrap();
            g
        },
        &model.params,
        GradCheckConfig { samples: GRAD_SAMPLES, tol: GRAD_RTOL, ..GradCheckConfig::default() },
        &mut Rng::new(1),
    );
    let dt = t0.elapsed();
    check(
        report.passed && report.checked >= GRAD_MIN_CHECKED && dt < GRAD_BUDGET,
        format!(
            "{} parameters checked at rtol {GRAD_RTOL:e}, worst {:.2e}, {dt:.1?}",
            report.checked,
            report.worst.map_or(0.0, |p| p.rel_err)
        ),
    )
}

fn decomposition_identity() -> Outcome {
    let t0 = Instant::now();
    let cfg = DecompositionConfig::default();
    let mut rng = Rng::new(2);
    let mut worst = 0.0f64;
    for i in 0..1000 {
        let len = [16, 64, 128, 1000][i % 4];
        let x: Vec<f64> = (0..len).map(|_| rng.normal() * 3.0).collect();
        let (c, s) = decompose(&x, &cfg).unwrap();
        for j in 0..len {
            worst = worst.max((c[j] + s[j] - x[j]).abs());
        }
    }
    let dt = t0.elapsed();
    check(worst <= DECOMP_TOL && dt < DECOMP_BUDGET, format!("max |C+S-x| {worst:.1e} <= {DECOMP_TOL:e}, {dt:.1?}"))
}

fn constant_response(model: &Model<f32>) -> f64 {
    let mut worst = 0.0f64;
    for len in [8, 32, 100] {
        for level in [-4.0f32, 0.0, 0.7, 12.5] {
            let y = model.encode_style(&vec![level; len]).unwrap();
            worst = y.iter().fold(worst, |m, v| m.max(v.abs() as f64));
        }
    }
    worst
}

fn constraint_suite() -> Outcome {
    let t0 = Instant::now();
    let data = generate_synthetic(&SyntheticSpec { count: 32, len: 64, ..SyntheticSpec::default() }).unwrap();
    let windows = WindowSampler::new(&data, WindowSpec { len: 32 }).unwrap();
    let cfg = TrainConfig { iterations: CONSTRAINT_STEPS, batch: 4, window: 32, ..TrainConfig::default() };
    let mut trainer = Trainer::new(&ModelConfig::tiny(), cfg).unwrap();
    let before = constant_response(&trainer.model);
    trainer.run(&windows, None, None, |_, _| {}).unwrap();
    let after = constant_response(&trainer.model);
    let mut projected = trainer.model.clone();
    projected.project_constraints();
    let idempotent = projected.params == trainer.model.params;
    let dt = t0.elapsed();
    check(
        before <= CONSTRAINT_TOL && after <= CONSTRAINT_TOL && idempotent && dt < CONSTRAINT_BUDGET,
        format!(
            "constant-input response {before:.1e} before, {after:.1e} after {CONSTRAINT_STEPS} steps (<= {CONSTRAINT_TOL:e}); \
             re-projection {}; {dt:.1?}",
            if idempotent { "bit-identical" } else { "CHANGED weights" }
        ),
    )
}

fn schedule_oracle() -> Outcome {
    let s = NoiseSchedule::default_linear(500).unwrap();
    let mut prod = 1.0f64;
    let mut worst = 0.0f64;
    for t in 1..=500 {
        prod *= 1.0 - (1e-4 + (2e-2 - 1e-4) * (t - 1) as f64 / 499.0);
        worst = worst.max((s.alpha_bar(t) - prod).abs());
    }
    check(
        worst <= SCHEDULE_TOL && s.alpha_bar(1) == 0.9999,
        format!("max |alpha_bar - loop| {worst:.1e} <= {SCHEDULE_TOL:e}; alpha_bar(1) = {}", s.alpha_bar(1)),
    )
}

fn guidance_collapse() -> Outcome {
    let t = &toy().trainer;
    let pair = &held_out()[0];
    let a: Vec<f32> = pair.content.iter().map(|&v| v as f32).collect();
    let b: Vec<f32> = pair.style.iter().map(|&v| v as f32).collect();
    let stats = normalize(&a).1;
    let mut rng = Rng::new(55);
    let seeds: Vec<u64> = (0..COLLAPSE_SEEDS).map(|_| rng.next_u64()).collect();
    let pairs = vec![Pair { content: &a[..], style: &b[..] }; seeds.len()];
    let guided = sample_batch(&t.model, &pairs, &t.schedule, &GuidanceConfig::new(0.0, 0.0, 1.0), &seeds).unwrap();
    let same = seeds
        .iter()
        .zip(&guided)
        .filter(|(&s, g)| sample_unconditional(&t.model, a.len(), &t.schedule, 1.0, s, stats).unwrap() == **g)
        .count();
    check(same == seeds.len(), format!("{same}/{} seeds bit-identical to the unconditional sampler", seeds.len()))
}

fn temperature_trend() -> Outcome {
    let t = &toy().trainer;
    let pair = &held_out()[0];
    let emb = StatEmbedding::reference();
    let first = temperature_sweep(&t.model, pair, &t.schedule, &DISPERSION_TEMPS, DISPERSION_REPEATS, 3, emb).unwrap();
    let again = temperature_sweep(&t.model, pair, &t.schedule, &[0.0], DISPERSION_REPEATS, 3, emb).unwrap();
    let deterministic = first[0].samples == again[0].samples;
    let d: Vec<f64> = first.iter().map(|r| r.dispersion).collect();
    let monotone = d.windows(2).all(|w| w[0] <= w[1]);
    check(
        deterministic && monotone,
        format!(
            "lambda=0 repeat {}; dispersion over {DISPERSION_REPEATS} repeats at lambda {DISPERSION_TEMPS:?}: {}",
            if deterministic { "bit-identical" } else { "DIFFERS" },
            d.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join(" <= ")
        ),
    )
}

fn training_convergence() -> Outcome {
    let toy = toy();
    let ratio = toy.last_decile / toy.first_decile;
    check(
        ratio < LOSS_RATIO && toy.elapsed < TRAIN_BUDGET,
        format!(
            "final/first decile loss {:.4}/{:.4} = {ratio:.3} < {LOSS_RATIO}; {TOY_ITERATIONS} iterations in {:.0?} (budget {:.0?})",
            toy.last_decile, toy.first_decile, toy.elapsed, TRAIN_BUDGET
        ),
    )
}

fn transfer_sanity() -> Outcome {
    let cfg = DecompositionConfig::default();
    let pairs = held_out();
    let n = pairs.len() as f64;
    let raw_si = pairs.iter().map(|p| tsst_core::metrics::si(&p.content, &p.style, &cfg).unwrap()).sum::<f64>() / n;
    let raw_cp = pairs.iter().map(|p| tsst_core::metrics::cp(&p.style, &p.content, &cfg).unwrap()).sum::<f64>() / n;
    let (cp, si) = transfer_scores(1.0, 1.0);
    check(
        si < raw_si && cp < raw_cp,
        format!("{HELD_OUT_PAIRS} pairs: SI(x,b) {si:.4} < SI(a,b) {raw_si:.4}; CP(x,a) {cp:.4} < CP(b,a) {raw_cp:.4}"),
    )
}

fn guidance_trend() -> Outcome {
    let (cp_c, si_c) = transfer_scores(1.0, 0.25);
    let (cp_s, si_s) = transfer_scores(0.25, 1.0);
    check(
        cp_c < cp_s && si_s < si_c,
        format!(
            "CP (1,0.25) {cp_c:.4} {} CP (0.25,1) {cp_s:.4}; SI (0.25,1) {si_s:.4} {} SI (1,0.25) {si_c:.4}",
            if cp_c < cp_s { "<" } else { ">=" },
            if si_s < si_c { "<" } else { ">=" },
        ),
    )
}

fn length_extrapolation() -> Outcome {
    let t = &toy().trainer;
    let rows = length_sweep(
        &t.model,
        &t.schedule,
        &LENGTHS,
        SyntheticSpec::default().len,
        LENGTH_PAIRS,
        &GuidanceConfig::default(),
        SAMPLE_SEED,
        StatEmbedding::reference(),
        |len| eprintln!("  length {len} sampled"),
    )
    .map_err(|e| format!("sampling failed: {e}"))?;
    let base = &rows[0].report;
    let mut ok = true;
    let mut parts = vec![];
    for r in &rows[1..] {
        let rep = &r.report;
        let ratios = [rep.cp.mean / base.cp.mean, rep.si.mean / base.si.mean, rep.rm.mean / base.rm.mean];
        let within = ratios.iter().all(|q| q.is_finite() && *q <= LENGTH_FACTOR && *q >= 1.0 / LENGTH_FACTOR);
        ok &= within;
        parts.push(format!("L={} x{:.2}/{:.2}/{:.2}{}", r.len, ratios[0], ratios[1], ratios[2], if within { "" } else { "!" }));
    }
    check(
        ok,
        format!(
            "CP/SI/RM relative to L=128 ({:.3}/{:.3}/{:.3}), bounds [1/{LENGTH_FACTOR}, {LENGTH_FACTOR}]: {}",
            base.cp.mean,
            base.si.mean,
            base.rm.mean,
            parts.join(", ")
        ),
    )
}

fn baseline_exactness() -> Outcome {
    let mut rng = Rng::new(11);
    let mut stitch_worst = 0.0f64;
    let mut haar_worst = 0.0f64;
    let mut energy_worst = 0.0f64;
    let mut nst_rises = 0;
    for len in [16usize, 64, 100, 256] {
        let x: Vec<f64> = (0..len).map(|_| rng.normal()).collect();
        let y = stitch(&x, &x, &StitchConfig::default()).unwrap();
        stitch_worst = x.iter().zip(&y).fold(stitch_worst, |m, (a, b)| m.max((a - b).abs()));

        let padded: Vec<f64> = (0..len.div_ceil(8) * 8).map(|_| rng.normal()).collect();
        let (approx, details) = haar_forward(&padded, 3).unwrap();
        let back = haar_inverse(&approx, &details).unwrap();
        haar_worst = padded.iter().zip(&back).fold(haar_worst, |m, (a, b)| m.max((a - b).abs()));
        let e_in: f64 = padded.iter().map(|v| v * v).sum();
        let e_out: f64 = approx.iter().chain(details.iter().flatten()).map(|v| v * v).sum();
        energy_worst = energy_worst.max((e_in - e_out).abs() / e_in);

        let b: Vec<f64> = (0..len).map(|_| rng.normal()).collect();
        let res = nst_default(&x, &b, &NstConfig::default()).unwrap();
        nst_rises += res.losses.windows(2).filter(|w| w[1] > w[0]).count();
    }
    check(
        stitch_worst == 0.0 && haar_worst <= HAAR_TOL && energy_worst <= HAAR_TOL && nst_rises == 0,
        format!(
            "stitch(x,x) max err {stitch_worst:.1e}; haar round trip {haar_worst:.1e}, relative energy {energy_worst:.1e} \
             (<= {HAAR_TOL:e}); nst loss increases {nst_rises}"
        ),
    )
}

fn resumability() -> Outcome {
    let data = generate_synthetic(&SyntheticSpec { count: 200, ..SyntheticSpec::default() }).unwrap();
    let windows = WindowSampler::new(&data, WindowSpec::default()).unwrap();
    let total = 2 * RESUME_SPLIT;
    let cfg = |iterations| TrainConfig { iterations, ..TrainConfig::default() };
    let mut straight = Trainer::new(&ModelConfig::desk(), cfg(total)).unwrap();
    straight.run(&windows, None, None, |_, _| {}).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("half.ckpt");
    let mut first = Trainer::new(&ModelConfig::desk(), cfg(RESUME_SPLIT)).unwrap();
    first.run(&windows, None, Some(&path), |_, _| {}).unwrap();
    let mut second = Trainer::from_checkpoint(&ModelConfig::desk(), cfg(total), load_checkpoint(&path).unwrap()).unwrap();
    second.run(&windows, None, None, |_, _| {}).unwrap();

    let path2 = dir.path().join("end.ckpt");
    save_checkpoint(&path2, &second.checkpoint()).unwrap();
    let same_params = straight.model.params == second.model.params;
    let same_state = straight.optimizer.m == second.optimizer.m && straight.optimizer.v == second.optimizer.v;
    check(
        same_params && same_state,
        format!(
            "{RESUME_SPLIT}+{RESUME_SPLIT} resumed vs {total} straight: parameters {}, optimizer moments {}",
            if same_params { "bit-identical" } else { "DIFFER" },
            if same_state { "bit-identical" } else { "DIFFER" }
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("gradient fidelity", gradient_fidelity),
        ("decomposition identity", decomposition_identity),
        ("constraint suite", constraint_suite),
        ("schedule oracle", schedule_oracle),
        ("guidance collapse", guidance_collapse),
        ("temperature determinism and diversity", temperature_trend),
        ("toy training convergence", training_convergence),
        ("style-transfer sanity", transfer_sanity),
        ("guidance trade-off", guidance_trend),
        ("length extrapolation", length_extrapolation),
        ("baseline exactness", baseline_exactness),
        ("checkpoint resumability", resumability),
    ];
    // numeric arguments select criteria; none runs all
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    let mut ran = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if !only.is_empty() && !only.contains(&(i + 1)) {
            continue;
        }
        ran += 1;
        let t0 = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("[{tag}] {:>2} {name}: {detail} [{:.1?}]", i + 1, t0.elapsed());
    }
    println!("acceptance: {} passed, {failed} failed", ran - failed);
    if failed > 0 && std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
