//! Command implementations behind the `eglpr` binary.

pub mod config;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use eglpr::acr::{build_model, write_metrics, AcrError, ModelConfig, Preset};
use eglpr::evalkit::{evaluate, format_table, EvalItem, ScenePrediction};
use eglpr::locator::run_stages;
use eglpr::nn::{load_weights, save_weights, NetworkWeights, NnError};
use eglpr::pipeline::{PipelineError, Recognition, Recognizer};
use eglpr::raster::{read_pnm, to_gray, write_pgm, PnmError, PnmImage};
use eglpr::synth::{
    gen_char_dataset, gen_scene_dataset, load_atlas, read_char_dataset, read_scene_truths, to_training_samples,
    write_char_dataset, write_scene_dataset, AtlasError, ClassProfile, GlyphAtlas, PlateStyle, SynthError,
};
use serde_json::json;
use thiserror::Error;

pub use config::{AppConfig, ConfigError};

#[derive(Debug, Parser)]
#[command(name = "eglpr", version, about = "Synthetic Egyptian licence-plate recognition")]
pub struct Cli {
    /// Flat key=value configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic character or scene corpus.
    GenDataset(GenArgs),
    /// Train the character classifier.
    Train(TrainArgs),
    /// Locate and read plates in an image.
    Recognize(RecognizeArgs),
    /// Run the locator alone and dump every stage.
    Locate(LocateArgs),
    /// Score a labelled scene directory.
    Eval(EvalArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DatasetKind {
    Chars,
    Scenes,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Profile {
    Balanced,
    Skewed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PresetArg {
    Desk,
    PaperReplica,
}

impl From<PresetArg> for Preset {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::Desk => Preset::Desk,
            PresetArg::PaperReplica => Preset::PaperReplica,
        }
    }
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub kind: DatasetKind,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Samples per class (chars).
    #[arg(long, default_value_t = 100)]
    pub per_class: usize,
    /// Number of scenes (scenes).
    #[arg(long, default_value_t = 200)]
    pub count: usize,
    #[arg(long, value_enum, default_value_t = Profile::Balanced)]
    pub profile: Profile,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value_t = PresetArg::Desk)]
    pub preset: PresetArg,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides `train.epochs`.
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Overrides `train.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Metrics file; defaults to `metrics.tsv` next to the weights.
    #[arg(long)]
    pub metrics: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RecognizeArgs {
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long)]
    pub weights: PathBuf,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct LocateArgs {
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long)]
    pub inspect: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub scenes: PathBuf,
    #[arg(long)]
    pub weights: PathBuf,
    #[arg(long)]
    pub report: PathBuf,
}

/// Process exit statuses.
pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 1;
    pub const DATA: i32 = 2;
    pub const INTERNAL: i32 = 3;
}

/// Failures raised directly by the commands.
#[derive(Debug, Error)]
pub enum Failure {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
}

/// Maps an error chain to an exit status: configuration and argument
/// problems are usage errors, unreadable or malformed inputs are data
/// errors, anything else is internal.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(f) = cause.downcast_ref::<Failure>() {
            return match f {
                Failure::Usage(_) => exit::USAGE,
                Failure::Data(_) => exit::DATA,
            };
        }
        if cause.is::<ConfigError>() {
            return exit::USAGE;
        }
        if let Some(AcrError::NonFiniteLoss { .. }) = cause.downcast_ref::<AcrError>() {
            return exit::INTERNAL;
        }
        if let Some(NnError::NonFinite(_)) = cause.downcast_ref::<NnError>() {
            return exit::INTERNAL;
        }
        if cause.is::<PnmError>()
            || cause.is::<SynthError>()
            || cause.is::<AtlasError>()
            || cause.is::<NnError>()
            || cause.is::<AcrError>()
            || cause.is::<std::io::Error>()
            || cause.is::<serde_json::Error>()
        {
            return exit::DATA;
        }
    }
    exit::INTERNAL
}

pub fn load_config(path: Option<&Path>) -> Result<AppConfig> {
    match path {
        Some(p) => Ok(AppConfig::load(p)?),
        None => Ok(AppConfig::default()),
    }
}

fn atlas(cfg: &AppConfig) -> Result<GlyphAtlas> {
    match &cfg.atlas {
        Some(p) => load_atlas(p).with_context(|| format!("loading atlas {}", p.display())),
        None => Ok(GlyphAtlas::builtin()),
    }
}

pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let cfg = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::GenDataset(a) => gen_dataset(&cfg, &a, out),
        Command::Train(a) => train(&cfg, &a, out, err),
        Command::Recognize(a) => recognize(&cfg, &a, out),
        Command::Locate(a) => locate(&cfg, &a, out),
        Command::Eval(a) => eval(&cfg, &a, out),
    }
}

fn gen_dataset(cfg: &AppConfig, a: &GenArgs, out: &mut dyn Write) -> Result<()> {
    let atlas = atlas(cfg)?;
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    match a.kind {
        DatasetKind::Chars => {
            if a.per_class == 0 {
                return Err(Failure::Usage("--per-class must be at least 1".into()).into());
            }
            let profile = match a.profile {
                Profile::Balanced => ClassProfile::Balanced,
                Profile::Skewed => ClassProfile::Skewed,
            };
            let params = eglpr::synth::AugmentParams { seed: a.seed, ..cfg.augment.clone() };
            let samples = gen_char_dataset(&atlas, a.per_class, profile, &params)?;
            write_char_dataset(&samples, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
            writeln!(out, "wrote {} character images and {} manifest rows to {}", samples.len(), samples.len(), a.out.display())?;
        }
        DatasetKind::Scenes => {
            if a.count == 0 {
                return Err(Failure::Usage("--count must be at least 1".into()).into());
            }
            let scenes = gen_scene_dataset(&atlas, a.count, a.seed, &PlateStyle::default(), &cfg.scene)?;
            write_scene_dataset(&scenes, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
            writeln!(out, "wrote {} scenes and {} truth files to {}", scenes.len(), scenes.len(), a.out.display())?;
        }
    }
    Ok(())
}

fn train(cfg: &AppConfig, a: &TrainArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let mut tc = cfg.train.clone();
    if let Some(e) = a.epochs {
        tc.epochs = e;
    }
    if let Some(s) = a.seed {
        tc.seed = s;
    }
    tc.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let samples = read_char_dataset(&a.data).with_context(|| format!("reading dataset {}", a.data.display()))?;
    if samples.is_empty() {
        return Err(Failure::Data(format!("{} lists no samples", a.data.display())).into());
    }
    let model = build_model(a.preset.into());
    writeln!(err, "training {} ({} parameters) on {} samples", model.preset, model.param_count(), samples.len())?;
    let train_samples = to_training_samples(&samples);
    let labels: Vec<usize> = train_samples.iter().map(|s| s.label).collect();
    let (ti, vi) = eglpr::acr::stratified_split(&labels, tc.val_fraction, tc.seed);
    let pick = |idx: &[usize]| idx.iter().map(|&i| train_samples[i].clone()).collect::<Vec<_>>();
    let outcome = eglpr::acr::train_split(&pick(&ti), &pick(&vi), &model, &tc, &mut |m| {
        let val = m.val_acc.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"));
        let _ = writeln!(err, "epoch {:>3}  loss {:.5}  train {:.4}  val {}", m.epoch, m.loss, m.train_acc, val);
    })?;
    if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    save_weights(&a.out, &outcome.weights).with_context(|| format!("writing {}", a.out.display()))?;
    let metrics_path = a.metrics.clone().unwrap_or_else(|| a.out.with_file_name("metrics.tsv"));
    let mut buf = Vec::new();
    write_metrics(&outcome.metrics, &mut buf)?;
    fs::write(&metrics_path, buf).with_context(|| format!("writing {}", metrics_path.display()))?;
    let best = &outcome.metrics[outcome.best_epoch - 1];
    writeln!(
        out,
        "saved epoch {} weights to {} (val acc {}); metrics in {}",
        outcome.best_epoch,
        a.out.display(),
        best.val_acc.map_or_else(|| "-".to_string(), |v| format!("{v:.4}")),
        metrics_path.display()
    )?;
    Ok(())
}

/// Loads weights and picks the preset whose layout they match.
pub fn load_model(path: &Path) -> Result<(ModelConfig, NetworkWeights)> {
    let weights = load_weights(path).with_context(|| format!("loading weights {}", path.display()))?;
    for preset in [Preset::Desk, Preset::PaperReplica] {
        let model = build_model(preset);
        if model.network.check_weights(&weights).is_ok() {
            return Ok((model, weights));
        }
    }
    Err(Failure::Data(format!("{} does not match any model preset", path.display())).into())
}

fn read_image(path: &Path) -> Result<PnmImage> {
    read_pnm(path).with_context(|| format!("reading image {}", path.display()))
}

fn recognizer(cfg: &AppConfig, weights: &Path) -> Result<Recognizer> {
    let (model, w) = load_model(weights)?;
    Recognizer::new(model, w, cfg.locator.clone()).map_err(|e| match e {
        PipelineError::Locator(e) => Failure::Usage(e.to_string()).into(),
        other => anyhow::Error::from(other),
    })
}

pub fn recognition_json(image: &Path, r: &Recognition) -> serde_json::Value {
    json!({ "image": image.display().to_string(), "plates": r.plates })
}

fn recognize(cfg: &AppConfig, a: &RecognizeArgs, out: &mut dyn Write) -> Result<()> {
    let rec = recognizer(cfg, &a.weights)?;
    let img = read_image(&a.image)?;
    let r = rec.recognize(&img)?;
    if a.json {
        writeln!(out, "{}", serde_json::to_string_pretty(&recognition_json(&a.image, &r))?)?;
    } else if r.plates.is_empty() {
        writeln!(out, "no plate found")?;
    } else {
        for p in &r.plates {
            let b = p.reading.bbox;
            writeln!(
                out,
                "{} {}  ({})  at [{}, {}, {}, {}]  confidence {:.3}{}",
                p.reading.digits,
                p.reading.letters,
                p.reading.latin,
                b.x,
                b.y,
                b.w,
                b.h,
                p.reading.confidence,
                if p.violations.is_empty() { "" } else { "  (outside plate grammar)" }
            )?;
        }
    }
    Ok(())
}

fn locate(cfg: &AppConfig, a: &LocateArgs, out: &mut dyn Write) -> Result<()> {
    let img = read_image(&a.image)?;
    let gray = match &img {
        PnmImage::Gray(g) => g.clone(),
        PnmImage::Rgb(c) => to_gray(c),
    };
    let stages = run_stages(&gray, &cfg.locator).map_err(|e| Failure::Usage(e.to_string()))?;
    fs::create_dir_all(&a.inspect).with_context(|| format!("creating {}", a.inspect.display()))?;
    for (name, img) in stages.dumps() {
        write_pgm(&img, a.inspect.join(format!("{name}.pgm")))?;
    }
    let candidates = json!({ "image": a.image.display().to_string(), "candidates": stages.candidates });
    fs::write(a.inspect.join("candidates.json"), serde_json::to_string_pretty(&candidates)? + "\n")?;
    writeln!(out, "{} candidate(s); stage dumps in {}", stages.candidates.len(), a.inspect.display())?;
    for c in &stages.candidates {
        writeln!(out, "  [{}, {}, {}, {}] score {:.3}", c.bbox.x, c.bbox.y, c.bbox.w, c.bbox.h, c.score)?;
    }
    Ok(())
}

fn eval(cfg: &AppConfig, a: &EvalArgs, out: &mut dyn Write) -> Result<()> {
    let rec = recognizer(cfg, &a.weights)?;
    let truths = read_scene_truths(&a.scenes).with_context(|| format!("reading scenes {}", a.scenes.display()))?;
    if truths.is_empty() {
        bail!(Failure::Data(format!("no scenes in {}", a.scenes.display())));
    }
    let mut items = Vec::with_capacity(truths.len());
    for (path, truth) in truths {
        let r = rec.recognize(&read_image(&path)?)?;
        let name = path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
        items.push(EvalItem { name, truth, prediction: ScenePrediction::from(&r) });
    }
    let report = evaluate(&items).map_err(|e| Failure::Data(e.to_string()))?;
    if let Some(parent) = a.report.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(&a.report, serde_json::to_string_pretty(&report)? + "\n")
        .with_context(|| format!("writing {}", a.report.display()))?;
    write!(out, "{}", format_table(&report))?;
    writeln!(out, "\n{:<24} {:<28} {:>16}", "method", "data", "recognition rate")?;
    writeln!(
        out,
        "{:<24} {:<28} {:>14.2} %",
        format!("{} CNN", rec.model.preset),
        format!("{} synthetic scenes", report.n_scenes),
        100.0 * report.recognition_rate
    )?;
    Ok(())
}
