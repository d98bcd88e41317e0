use std::fmt;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use tsst_core::baselines::{haar_swap, nst_default, stitch, NstConfig, StitchConfig};
use tsst_core::config::RunConfig;
use tsst_core::data::{
    generate_synthetic, import_csv, load_checkpoint, normalize, CsvLayout, Dataset, LossLog, Record, WindowSampler,
    WindowSpec,
};
use tsst_core::diffusion::{sample_batch, sample_unconditional, GuidanceConfig, NoiseSchedule, Pair, Trainer};
use tsst_core::experiments::{
    encoder_ablation, guidance_sweep, length_sweep, temperature_sweep, transfer_pairs, TransferPair, GUIDANCE_GRID,
    LENGTHS, TEMPERATURES,
};
use tsst_core::metrics::{evaluate, DecompositionConfig, Embedding, StatEmbedding};
use tsst_core::{Error, Model};

use crate::svg;
use crate::{
    AblateArgs, AblationKind, BaselineArgs, BaselineKind, Cli, Command, EvaluateArgs, GenerateArgs, Layout, Preset,
    SamplingArgs, SynthArgs, TrainArgs,
};

pub const CONFIG_FILE: &str = "config.toml";
pub const CHECKPOINT_FILE: &str = "checkpoint.bin";
pub const LOSS_FILE: &str = "loss.csv";
pub const META_FILE: &str = "meta.json";

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Core(Error::Config(_)) => 1,
            CliError::Core(e) if e.is_numeric() => 3,
            CliError::Core(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(Error::Io(e))
    }
}

type Result<T> = std::result::Result<T, CliError>;

pub fn run(cli: &Cli) -> Result<()> {
    let root = &cli.root;
    match &cli.command {
        Command::InitConfig { out, preset } => {
            let cfg = match preset {
                Preset::Desk => RunConfig::desk(),
                Preset::Full => RunConfig::full(),
            };
            write(&resolve(root, out), cfg.to_toml())
        }
        Command::Synth(a) => synth(root, a),
        Command::Convert { input, layout, out } => {
            let text = std::fs::read_to_string(input)
                .map_err(|e| Error::Data(format!("cannot read {}: {e}", input.display())))?;
            let layout = match layout {
                Layout::Wide => CsvLayout::Wide,
                Layout::Rows => CsvLayout::Rows,
            };
            let ds = import_csv(&text, layout)?;
            write(&resolve(root, out), ds.to_text())?;
            println!("{} series", ds.len());
            Ok(())
        }
        Command::Train(a) => train(root, a),
        Command::Generate(a) => generate(root, a),
        Command::Evaluate(a) => evaluate_cmd(root, a),
        Command::Ablate(a) => ablate(root, a),
        Command::Baseline(a) => baseline(root, a),
    }
}

fn resolve(root: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        root.join(p)
    }
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, contents)?;
    Ok(())
}

/// Timestamps live only in this sidecar so every other output is a pure
/// function of the inputs.
fn write_meta(dir: &Path, command: &str) -> Result<()> {
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let meta = serde_json::json!({
        "command": command,
        "created_unix": secs,
        "version": env!("CARGO_PKG_VERSION"),
    });
    write(&dir.join(META_FILE), serde_json::to_string_pretty(&meta).unwrap() + "\n")
}

fn read_dataset(path: &Path) -> Result<Dataset> {
    Ok(Dataset::read(path)?)
}

fn synth(root: &Path, a: &SynthArgs) -> Result<()> {
    let mut spec = match &a.config {
        Some(p) => RunConfig::read(p)?.synthetic,
        None => RunConfig::desk().synthetic,
    };
    spec.count = a.count.unwrap_or(spec.count);
    spec.len = a.len.unwrap_or(spec.len);
    spec.seed = a.seed.unwrap_or(spec.seed);
    let out = resolve(root, &a.out);
    if a.pairs {
        let pairs = transfer_pairs(spec.count, spec.len, spec.seed, &spec.params);
        let (content, style) = pairs_to_datasets(&pairs);
        write(&out.with_extension("content.tsv"), content.to_text())?;
        write(&out.with_extension("style.tsv"), style.to_text())?;
        println!("{} pairs of length {}", pairs.len(), spec.len);
    } else {
        let ds = generate_synthetic(&spec)?;
        write(&out, ds.to_text())?;
        println!("{} series of length {}", ds.len(), spec.len);
    }
    Ok(())
}

fn pairs_to_datasets(pairs: &[TransferPair]) -> (Dataset, Dataset) {
    let rec = |i: usize, tag: &str, fams: &[tsst_core::data::Family], v: &[f64]| Record {
        id: format!("pair{i:04}:{tag}:{}+{}", fams[0].name(), fams[1].name()),
        values: v.to_vec(),
    };
    let content = pairs.iter().enumerate().map(|(i, p)| rec(i, "content", &p.families[..2], &p.content)).collect();
    let style = pairs.iter().enumerate().map(|(i, p)| rec(i, "style", &p.families[2..], &p.style)).collect();
    (Dataset::new(content), Dataset::new(style))
}

fn train(root: &Path, a: &TrainArgs) -> Result<()> {
    let stored = a.run.as_ref().map(|r| resolve(root, r).join(CONFIG_FILE)).filter(|p| p.exists());
    let mut cfg = match (&a.config, &stored) {
        (Some(p), _) => RunConfig::read(p)?,
        (None, Some(p)) => RunConfig::read(p)?,
        (None, None) => RunConfig::desk(),
    };
    if let Some(n) = a.iterations {
        cfg.train.iterations = n;
    }
    if let Some(s) = a.seed {
        cfg.train.seed = s;
    }
    if let Some(d) = &a.dataset {
        cfg.dataset = Some(d.clone());
    }
    cfg.validate()?;
    let dir = resolve(root, a.run.as_ref().unwrap_or(&cfg.output_dir));
    std::fs::create_dir_all(&dir)?;
    let ckpt_path = dir.join(CHECKPOINT_FILE);
    let cfg_path = dir.join(CONFIG_FILE);
    if ckpt_path.exists() && cfg_path.exists() {
        let prev = RunConfig::read(&cfg_path)?;
        if prev.model != cfg.model {
            return Err(CliError::Usage(format!(
                "{} holds a checkpoint for a different architecture; use another --run directory",
                dir.display()
            )));
        }
    }
    write(&cfg_path, cfg.to_toml())?;

    let dataset = match &cfg.dataset {
        Some(p) => read_dataset(&resolve(root, p))?,
        None => generate_synthetic(&cfg.synthetic)?,
    };
    let windows = WindowSampler::new(&dataset, WindowSpec { len: cfg.train.window })?;
    let mut trainer = if ckpt_path.exists() {
        let ckpt = load_checkpoint(&ckpt_path)?;
        if !a.quiet {
            eprintln!("resuming from iteration {}", ckpt.iteration);
        }
        Trainer::from_checkpoint(&cfg.model, cfg.train.clone(), ckpt)?
    } else {
        Trainer::new(&cfg.model, cfg.train.clone())?
    };
    let mut log = LossLog::open(&dir.join(LOSS_FILE), trainer.iteration)?;
    let quiet = a.quiet;
    let every = (cfg.train.iterations / 20).max(cfg.train.log_every);
    trainer.run(&windows, Some(&mut log), Some(&ckpt_path), |i, l| {
        if !quiet && i % every == 0 {
            eprintln!("iteration {i:>7}  loss {l:.5}");
        }
    })?;
    write_meta(&dir, "train")?;
    println!("trained to iteration {} in {}", trainer.iteration, dir.display());
    Ok(())
}

struct LoadedRun {
    config: RunConfig,
    model: Model<f32>,
    schedule: NoiseSchedule,
}

fn load_run(dir: &Path, steps: Option<usize>) -> Result<LoadedRun> {
    let cfg_path = dir.join(CONFIG_FILE);
    let ckpt_path = dir.join(CHECKPOINT_FILE);
    if !ckpt_path.exists() {
        return Err(CliError::Core(Error::Data(format!("no checkpoint at {}", ckpt_path.display()))));
    }
    let config = RunConfig::read(&cfg_path)?;
    let ckpt = load_checkpoint(&ckpt_path)?;
    let mut model = Model::<f32>::new(&config.model, 0)?;
    model.params.check_layout(&ckpt.params)?;
    model.params = ckpt.params;
    let schedule = NoiseSchedule::default_linear(steps.unwrap_or(config.train.diffusion_steps))?;
    Ok(LoadedRun { config, model, schedule })
}

fn guidance(base: &GuidanceConfig, s: &SamplingArgs) -> GuidanceConfig {
    GuidanceConfig {
        content_scale: s.content_scale.unwrap_or(base.content_scale),
        style_scale: s.style_scale.unwrap_or(base.style_scale),
        temperature: s.temperature.unwrap_or(base.temperature),
        clip_x0: base.clip_x0,
    }
}

fn aligned(content: &Dataset, style: &Dataset) -> Result<()> {
    if content.len() != style.len() {
        return Err(CliError::Core(Error::Data(format!(
            "{} content records but {} style records",
            content.len(),
            style.len()
        ))));
    }
    Ok(())
}

fn to_f32(x: &[f64]) -> Vec<f32> {
    x.iter().map(|&v| v as f32).collect()
}

fn to_f64(x: &[f32]) -> Vec<f64> {
    x.iter().map(|&v| v as f64).collect()
}

fn generate(root: &Path, a: &GenerateArgs) -> Result<()> {
    if a.num == 0 {
        return Err(CliError::Usage("--num must be >= 1".into()));
    }
    let run = load_run(&resolve(root, &a.run), a.sampling.steps)?;
    let content = read_dataset(&a.content)?;
    let style = read_dataset(&a.style)?;
    aligned(&content, &style)?;
    let g = guidance(&run.config.guidance, &a.sampling);
    let mut records = Vec::with_capacity(content.len() * a.num);
    for (i, (c, s)) in content.records.iter().zip(&style.records).enumerate() {
        let (cv, sv) = (to_f32(&c.values), to_f32(&s.values));
        let seeds: Vec<u64> = (0..a.num).map(|k| a.sampling.seed.wrapping_add((i * a.num + k) as u64)).collect();
        let outs: Vec<Vec<f32>> = if a.unconditional {
            let (_, stats) = normalize(&cv);
            seeds
                .iter()
                .map(|&seed| sample_unconditional(&run.model, cv.len(), &run.schedule, g.temperature, seed, stats))
                .collect::<std::result::Result<_, _>>()
        } else {
            let pairs = vec![Pair { content: &cv, style: &sv }; a.num];
            sample_batch(&run.model, &pairs, &run.schedule, &g, &seeds)
        }
        .map_err(|e| Error::Item { index: i, source: Box::new(e) })?;
        for (k, o) in outs.iter().enumerate() {
            records.push(Record { id: format!("{}|{}#{k}", c.id, s.id), values: to_f64(o) });
        }
    }
    let out = resolve(root, &a.out);
    std::fs::create_dir_all(&out)?;
    write(&out.join("generated.tsv"), Dataset::new(records.clone()).to_text())?;
    if let (Some(c), Some(s)) = (content.records.first(), style.records.first()) {
        let mut panels: Vec<(String, &[f64])> = vec![("content".into(), &c.values), ("style".into(), &s.values)];
        for (k, r) in records.iter().take(a.num.min(4)).enumerate() {
            panels.push((format!("generated #{k}"), &r.values));
        }
        let refs: Vec<(&str, &[f64])> = panels.iter().map(|(l, v)| (l.as_str(), *v)).collect();
        write(
            &out.join("generated.svg"),
            svg::panels(
                &format!("s_c={} s_s={} lambda={}", g.content_scale, g.style_scale, g.temperature),
                &refs,
            ),
        )?;
    }
    write_meta(&out, "generate")?;
    println!("{} series written to {}", records.len(), out.join("generated.tsv").display());
    Ok(())
}

fn embedding_by_name(name: &str) -> Result<&'static dyn Embedding> {
    match name {
        StatEmbedding::NAME => Ok(StatEmbedding::reference()),
        other => Err(CliError::Usage(format!("unknown embedding `{other}` (available: {})", StatEmbedding::NAME))),
    }
}

fn evaluate_cmd(root: &Path, a: &EvaluateArgs) -> Result<()> {
    let emb = embedding_by_name(&a.embedding)?;
    let generated = read_dataset(&a.generated)?;
    let content = read_dataset(&a.content)?;
    let style = read_dataset(&a.style)?;
    aligned(&content, &style)?;
    if generated.len() != content.len() {
        return Err(CliError::Core(Error::Data(format!(
            "{} generated records but {} content/style pairs",
            generated.len(),
            content.len()
        ))));
    }
    let triples: Vec<(&[f64], &[f64], &[f64])> = generated
        .records
        .iter()
        .zip(&content.records)
        .zip(&style.records)
        .map(|((g, c), s)| (g.values.as_slice(), c.values.as_slice(), s.values.as_slice()))
        .collect();
    let report = evaluate(&triples, emb, &DecompositionConfig::default())?;
    print!("{report}");
    if let Some(out) = &a.out {
        write(&resolve(root, out), report.to_tsv())?;
    }
    Ok(())
}

fn ablate(root: &Path, a: &AblateArgs) -> Result<()> {
    let emb = StatEmbedding::reference();
    let out = resolve(root, &a.out);
    std::fs::create_dir_all(&out)?;
    let seed = a.sampling.seed;
    let mut table = String::new();
    match a.kind {
        AblationKind::Encoder => {
            let mut cfg = match (&a.run, &a.config) {
                (Some(run), _) => RunConfig::read(&resolve(root, run).join(CONFIG_FILE))?,
                (None, Some(c)) => RunConfig::read(c)?,
                (None, None) => RunConfig::desk(),
            };
            if let Some(n) = a.iterations {
                cfg.train.iterations = n;
            }
            cfg.guidance = guidance(&cfg.guidance, &a.sampling);
            let dataset = match &cfg.dataset {
                Some(p) => read_dataset(&resolve(root, p))?,
                None => generate_synthetic(&cfg.synthetic)?,
            };
            let pairs = transfer_pairs(a.pairs, cfg.train.window, seed ^ 0xab1a7e, &cfg.synthetic.params);
            let rows = encoder_ablation(&cfg, &dataset, &pairs, seed, emb, |v, i, l| {
                if i % (cfg.train.iterations / 10).max(10) == 0 {
                    eprintln!("{:<28} iteration {i:>6} loss {l:.5}", v.label());
                }
            })?;
            table.push_str("variant\tfinal_loss\tcp\tsi\trm\tavg\n");
            for r in &rows {
                table.push_str(&format!(
                    "{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\n",
                    r.variant.label(),
                    r.final_loss,
                    r.report.cp.mean,
                    r.report.si.mean,
                    r.report.rm.mean,
                    r.report.overall.mean
                ));
            }
            let x: Vec<f64> = (0..rows.len()).map(|i| i as f64).collect();
            let col = |f: fn(&tsst_core::experiments::EncoderRow) -> f64| rows.iter().map(f).collect::<Vec<_>>();
            let plot = svg::lines(
                "encoder variants (0 full, 1 style plain, 2 both plain)",
                &x,
                &[("CP", col(|r| r.report.cp.mean)), ("SI", col(|r| r.report.si.mean)), ("RM", col(|r| r.report.rm.mean))],
            );
            write(&out.join("encoder.svg"), plot)?;
        }
        kind => {
            let run_dir = a.run.as_ref().ok_or_else(|| CliError::Usage("--run is required for this ablation".into()))?;
            let run = load_run(&resolve(root, run_dir), a.sampling.steps)?;
            let g = guidance(&run.config.guidance, &a.sampling);
            let window = run.config.train.window;
            let params = &run.config.synthetic.params;
            match kind {
                AblationKind::Guidance => {
                    let pairs = transfer_pairs(a.pairs, window, seed ^ 0xab1a7e, params);
                    let rows = guidance_sweep(&run.model, &pairs, &run.schedule, &GUIDANCE_GRID, g.temperature, seed, emb, |i, n| {
                        eprintln!("guidance row {i}/{n}")
                    })?;
                    table.push_str("s_c\ts_s\tcp\tsi\trm\tavg\n");
                    for r in &rows {
                        table.push_str(&format!(
                            "{:.2}\t{:.2}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\n",
                            r.content_scale, r.style_scale, r.report.cp.mean, r.report.si.mean, r.report.rm.mean, r.report.overall.mean
                        ));
                    }
                    let x: Vec<f64> = (0..rows.len()).map(|i| i as f64).collect();
                    let col = |f: fn(&tsst_core::experiments::GuidanceRow) -> f64| rows.iter().map(f).collect::<Vec<_>>();
                    write(
                        &out.join("guidance.svg"),
                        svg::lines(
                            "guidance grid (row order)",
                            &x,
                            &[
                                ("CP", col(|r| r.report.cp.mean)),
                                ("SI", col(|r| r.report.si.mean)),
                                ("RM", col(|r| r.report.rm.mean)),
                                ("Avg", col(|r| r.report.overall.mean)),
                            ],
                        ),
                    )?;
                }
                AblationKind::Temperature => {
                    let pair = transfer_pairs(1, window, seed ^ 0xab1a7e, params).remove(0);
                    let rows = temperature_sweep(&run.model, &pair, &run.schedule, &TEMPERATURES, a.repeats, seed, emb)?;
                    table.push_str("temperature\tdispersion\n");
                    for r in &rows {
                        table.push_str(&format!("{:.2}\t{:.6}\n", r.temperature, r.dispersion));
                    }
                    let labels: Vec<String> = rows.iter().map(|r| format!("lambda={}", r.temperature)).collect();
                    let groups: Vec<(&str, &[[f64; 2]])> =
                        rows.iter().zip(&labels).map(|(r, l)| (l.as_str(), r.points.as_slice())).collect();
                    write(&out.join("temperature_pca.svg"), svg::scatter("PCA of embeddings by temperature", &groups))?;
                }
                AblationKind::Length => {
                    let rows = length_sweep(&run.model, &run.schedule, &LENGTHS, run.config.synthetic.len, a.pairs, &g, seed, emb, |l| {
                        eprintln!("length {l} done")
                    })?;
                    table.push_str("length\tcp\tsi\trm\n");
                    for r in &rows {
                        table.push_str(&format!(
                            "{}\t{:.6}\t{:.6}\t{:.6}\n",
                            r.len, r.report.cp.mean, r.report.si.mean, r.report.rm.mean
                        ));
                    }
                    let x: Vec<f64> = rows.iter().map(|r| (r.len as f64).log2()).collect();
                    let col = |f: fn(&tsst_core::experiments::LengthRow) -> f64| rows.iter().map(f).collect::<Vec<_>>();
                    write(
                        &out.join("length.svg"),
                        svg::lines(
                            "metrics vs log2(length)",
                            &x,
                            &[("CP", col(|r| r.report.cp.mean)), ("SI", col(|r| r.report.si.mean)), ("RM", col(|r| r.report.rm.mean))],
                        ),
                    )?;
                }
                AblationKind::Encoder => unreachable!(),
            }
        }
    }
    let name = format!("{:?}", a.kind).to_lowercase();
    write(&out.join(format!("{name}.tsv")), &table)?;
    write_meta(&out, &format!("ablate {name}"))?;
    print!("{table}");
    Ok(())
}

fn baseline(root: &Path, a: &BaselineArgs) -> Result<()> {
    let content = read_dataset(&a.content)?;
    let style = read_dataset(&a.style)?;
    aligned(&content, &style)?;
    let mut records = Vec::with_capacity(content.len());
    for (i, (c, s)) in content.records.iter().zip(&style.records).enumerate() {
        let (cv, _) = normalize(&c.values);
        let (sv, _) = normalize(&s.values);
        let out = match a.method {
            BaselineKind::Stitch => stitch(&cv, &sv, &StitchConfig { kernel: a.kernel }),
            BaselineKind::Haar => haar_swap(&cv, &sv, a.levels),
            BaselineKind::Nst => nst_default(
                &cv,
                &sv,
                &NstConfig { alpha: a.alpha, beta: a.beta, step: a.step, iterations: a.iterations },
            )
            .map(|r| r.output),
        }
        .map_err(|e| Error::Item { index: i, source: Box::new(e) })?;
        records.push(Record { id: format!("{}|{}", c.id, s.id), values: out });
    }
    write(&resolve(root, &a.out), Dataset::new(records).to_text())?;
    println!("{} series written", content.len());
    Ok(())
}
