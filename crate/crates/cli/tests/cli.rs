use std::path::Path;
use std::process::{Command, Output};

const TINY: &[(&str, &str)] = &[
    ("count = 2000", "count = 24"),
    ("len = 256", "len = 64"),
    ("iterations = 5000", "iterations = 4"),
    ("batch = 32", "batch = 2"),
    ("window = 128", "window = 32"),
    ("diffusion_steps = 500", "diffusion_steps = 10"),
    ("hidden = 64", "hidden = 8"),
    ("heads = 4", "heads = 2"),
    ("layers = 2", "layers = 1"),
    ("channels = 32", "channels = 4"),
    ("blocks = 3", "blocks = 1"),
    ("hidden = 16", "hidden = 4"),
];

fn tsst(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tsst"))
        .args(args)
        .current_dir(dir)
        .env_remove("TSST_OUTPUT_ROOT")
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = tsst(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    tsst(dir, args).status.code().unwrap()
}

fn tiny_config(dir: &Path) {
    ok(dir, &["init-config", "--out", "cfg.toml"]);
    let mut text = std::fs::read_to_string(dir.join("cfg.toml")).unwrap();
    for (from, to) in TINY {
        assert!(text.contains(from), "{from}");
        text = text.replacen(from, to, 1);
    }
    std::fs::write(dir.join("cfg.toml"), text).unwrap();
}

fn trained(dir: &Path) {
    tiny_config(dir);
    ok(dir, &["synth", "--out", "pairs", "--pairs", "--count", "3", "--len", "32", "--seed", "4"]);
    ok(dir, &["train", "--config", "cfg.toml", "--run", "run", "--quiet"]);
}

#[test]
fn usage_errors_exit_one() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(code(d.path(), &["frobnicate"]), 1);
    assert_eq!(code(d.path(), &["baseline", "stitch"]), 1);
    assert_eq!(code(d.path(), &["generate", "--run", "r", "--content", "c", "--style", "s", "--out", "o", "--num", "0"]), 1);
}

#[test]
fn synth_is_reproducible() {
    let d = tempfile::tempdir().unwrap();
    ok(d.path(), &["synth", "--out", "a.tsv", "--count", "5", "--len", "40", "--seed", "9"]);
    ok(d.path(), &["synth", "--out", "b.tsv", "--count", "5", "--len", "40", "--seed", "9"]);
    ok(d.path(), &["synth", "--out", "c.tsv", "--count", "5", "--len", "40", "--seed", "10"]);
    let read = |n: &str| std::fs::read(d.path().join(n)).unwrap();
    assert_eq!(read("a.tsv"), read("b.tsv"));
    assert_ne!(read("a.tsv"), read("c.tsv"));
    assert_eq!(String::from_utf8(read("a.tsv")).unwrap().lines().count(), 5);
}

#[test]
fn root_env_redirects_outputs() {
    let d = tempfile::tempdir().unwrap();
    std::fs::create_dir(d.path().join("out")).unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_tsst"))
        .args(["synth", "--out", "x.tsv", "--count", "2", "--len", "16"])
        .current_dir(d.path())
        .env("TSST_OUTPUT_ROOT", "out")
        .status()
        .unwrap();
    assert!(status.success());
    assert!(d.path().join("out/x.tsv").exists());
}

#[test]
fn zero_iterations_writes_initial_checkpoint_and_resume_continues() {
    let d = tempfile::tempdir().unwrap();
    tiny_config(d.path());
    ok(d.path(), &["train", "--config", "cfg.toml", "--run", "run", "--iters", "0", "--quiet"]);
    assert!(d.path().join("run/checkpoint.bin").exists());
    assert!(d.path().join("run/config.toml").exists());
    assert_eq!(std::fs::read_to_string(d.path().join("run/loss.csv")).unwrap().trim(), "iteration,loss");

    // stored config is reused when --config is omitted
    ok(d.path(), &["train", "--run", "run", "--iters", "20", "--quiet"]);
    let log = std::fs::read_to_string(d.path().join("run/loss.csv")).unwrap();
    let iters: Vec<&str> = log.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(iters, ["10", "20"]);
}

#[test]
fn zero_guidance_matches_unconditional_flag() {
    let d = tempfile::tempdir().unwrap();
    trained(d.path());
    let common = ["generate", "--run", "run", "--content", "pairs.content.tsv", "--style", "pairs.style.tsv", "--seed", "3"];
    ok(d.path(), &[&common[..], &["--sc", "0", "--ss", "0", "--out", "g0"]].concat());
    ok(d.path(), &[&common[..], &["--unconditional", "--out", "gu"]].concat());
    let g0 = std::fs::read(d.path().join("g0/generated.tsv")).unwrap();
    assert_eq!(g0, std::fs::read(d.path().join("gu/generated.tsv")).unwrap());
    assert!(d.path().join("g0/generated.svg").exists());

    ok(d.path(), &[&common[..], &["--num", "2", "--out", "g2"]].concat());
    let text = std::fs::read_to_string(d.path().join("g2/generated.tsv")).unwrap();
    assert_eq!(text.lines().count(), 6);
}

#[test]
fn evaluate_scores_identity_as_zero_and_rejects_misaligned_input() {
    let d = tempfile::tempdir().unwrap();
    ok(d.path(), &["synth", "--out", "p", "--pairs", "--count", "4", "--len", "48"]);
    let out = ok(
        d.path(),
        &["evaluate", "--generated", "p.content.tsv", "--content", "p.content.tsv", "--style", "p.content.tsv", "--out", "s.tsv"],
    );
    assert!(out.contains("CP            0.0000"), "{out}");
    let tsv = std::fs::read_to_string(d.path().join("s.tsv")).unwrap();
    assert_eq!(tsv.lines().count(), 5);
    assert!(tsv.lines().skip(1).all(|l| l.split('\t').skip(1).all(|v| v.parse::<f64>().unwrap() == 0.0)));

    let first: String = std::fs::read_to_string(d.path().join("p.style.tsv")).unwrap().lines().take(2).collect::<Vec<_>>().join("\n");
    std::fs::write(d.path().join("short.tsv"), first).unwrap();
    assert_eq!(code(d.path(), &["evaluate", "--generated", "short.tsv", "--content", "p.content.tsv", "--style", "p.style.tsv"]), 2);
    assert_eq!(code(d.path(), &["evaluate", "--generated", "p.content.tsv", "--content", "p.content.tsv", "--style", "p.style.tsv", "--embedding", "nope"]), 1);
}

#[test]
fn baselines_write_one_series_per_pair() {
    let d = tempfile::tempdir().unwrap();
    ok(d.path(), &["synth", "--out", "p", "--pairs", "--count", "3", "--len", "40"]);
    for m in ["stitch", "haar", "nst"] {
        let out = format!("{m}.tsv");
        ok(d.path(), &["baseline", m, "--content", "p.content.tsv", "--style", "p.style.tsv", "--out", &out]);
        let text = std::fs::read_to_string(d.path().join(&out)).unwrap();
        assert_eq!(text.lines().count(), 3, "{m}");
        assert!(text.lines().all(|l| l.split('\t').nth(1).unwrap().split(',').count() == 40), "{m}");
    }
    let diverge = ["baseline", "nst", "--content", "p.content.tsv", "--style", "p.style.tsv", "--out", "x.tsv", "--step", "50"];
    assert_eq!(code(d.path(), &diverge), 3);
}

#[test]
fn convert_reads_wide_csv_with_missing_cells() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("w.csv"), "a,b\n1,2\n3,NA\n5,6\n").unwrap();
    ok(d.path(), &["convert", "--input", "w.csv", "--out", "w.tsv"]);
    assert_eq!(std::fs::read_to_string(d.path().join("w.tsv")).unwrap(), "a\t1,3,5\nb\t2,NaN,6\n");
}

#[test]
fn missing_or_foreign_checkpoints_are_errors() {
    let d = tempfile::tempdir().unwrap();
    ok(d.path(), &["synth", "--out", "p", "--pairs", "--count", "2", "--len", "32"]);
    let gen = ["generate", "--run", "nope", "--content", "p.content.tsv", "--style", "p.style.tsv", "--out", "g"];
    assert_eq!(code(d.path(), &gen), 2);

    trained(d.path());
    let mut cfg = std::fs::read_to_string(d.path().join("cfg.toml")).unwrap();
    cfg = cfg.replacen("heads = 2", "heads = 4", 1);
    std::fs::write(d.path().join("other.toml"), cfg).unwrap();
    assert_eq!(code(d.path(), &["train", "--config", "other.toml", "--run", "run", "--quiet"]), 1);

    let ckpt = d.path().join("run/checkpoint.bin");
    let mut bytes = std::fs::read(&ckpt).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0x40;
    std::fs::write(&ckpt, bytes).unwrap();
    let gen = ["generate", "--run", "run", "--content", "p.content.tsv", "--style", "p.style.tsv", "--out", "g"];
    assert_eq!(code(d.path(), &gen), 2);
}

#[test]
fn ablations_write_tables() {
    let d = tempfile::tempdir().unwrap();
    trained(d.path());
    ok(d.path(), &["ablate", "guidance", "--run", "run", "--pairs", "3", "--out", "ab"]);
    let t = std::fs::read_to_string(d.path().join("ab/guidance.tsv")).unwrap();
    assert_eq!(t.lines().count(), 11);
    assert!(t.starts_with("s_c\ts_s\tcp\tsi\trm\tavg"));
    ok(d.path(), &["ablate", "temperature", "--run", "run", "--pairs", "3", "--repeats", "3", "--out", "ab"]);
    assert_eq!(std::fs::read_to_string(d.path().join("ab/temperature.tsv")).unwrap().lines().count(), 6);
    assert_eq!(code(d.path(), &["ablate", "temperature", "--run", "run", "--repeats", "2", "--out", "ab"]), 1);
    assert!(d.path().join("ab/temperature_pca.svg").exists());
    ok(d.path(), &["ablate", "encoder", "--config", "cfg.toml", "--pairs", "3", "--iters", "2", "--out", "ab"]);
    assert_eq!(std::fs::read_to_string(d.path().join("ab/encoder.tsv")).unwrap().lines().count(), 4);
}
