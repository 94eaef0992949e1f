use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use iegan_cli::ablate::{run_ablation, smoke_config};
use iegan_cli::config::{ExperimentConfig, Preset};
use iegan_cli::corpus::{degrade_corpus, manifest_for, MANIFEST_FILE};
use iegan_cli::enhance::cmd_enhance;
use iegan_cli::eval::{baseline, baseline_label, cmd_eval, describe, eval_pairs, EvalReport};
use iegan_cli::grid::emit_grid;
use iegan_cli::{eval_threads, exit_status, HarnessError};
use iegan_core::data::{write_synthetic_corpus, Dataset};
use iegan_core::gradsuite;
use iegan_core::losses::LossKind;
use iegan_core::models::DiscKind;
use iegan_core::trainer::{load_generator, resume, train, ReconMode};
use iegan_imaging::degrade::{DegradeSpec, Task};

#[derive(Parser)]
#[command(name = "iegan", version, about = "Edge-aware GAN image restoration: data, training, evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write degraded/ground-truth PNG pairs and a manifest for a directory of images.
    Degrade(DegradeArgs),
    /// Train a generator/discriminator pair.
    Train(TrainArgs),
    /// Score a checkpoint and the model-free baseline on held-out images.
    Eval(EvalArgs),
    /// Restore a single image with a trained generator.
    Enhance(EnhanceArgs),
    /// Train and score the 2 x 4 discriminator/loss grid.
    Ablate(AblateArgs),
    /// Finite-difference audit of every differentiable operation.
    Gradcheck(GradcheckArgs),
    /// Write a procedural image corpus.
    Synth(SynthArgs),
}

#[derive(Args, Default)]
struct TaskArgs {
    /// ar, sr or arsr.
    #[arg(long)]
    task: Option<Task>,
    /// JPEG quality factor.
    #[arg(long)]
    quality: Option<u8>,
    /// Downscale factor (2 or 4).
    #[arg(long)]
    scale: Option<usize>,
    /// Ground-truth patch size.
    #[arg(long)]
    patch: Option<usize>,
}

impl TaskArgs {
    fn any(&self) -> bool {
        self.task.is_some() || self.quality.is_some() || self.scale.is_some() || self.patch.is_some()
    }

    /// `base` with the given flags applied. A new task starts from its
    /// published protocol before the other flags are applied.
    fn apply(&self, base: DegradeSpec) -> Result<DegradeSpec> {
        let mut spec = match self.task {
            Some(t) if t != base.task => {
                let r = DegradeSpec::reference(t);
                DegradeSpec { quality: base.quality, ..r }
            }
            _ => base,
        };
        if let Some(q) = self.quality {
            spec.quality = q;
        }
        if let Some(s) = self.scale {
            spec.scale = s;
        }
        if let Some(p) = self.patch {
            spec.patch = p;
        }
        if spec.task == Task::Ar {
            spec.scale = 1;
        }
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Args)]
struct DegradeArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[command(flatten)]
    spec: TaskArgs,
    /// Training fraction recorded in the manifest.
    #[arg(long, default_value_t = 0.8)]
    split: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct TrainOverrides {
    /// JSON experiment config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Values used for everything the config file leaves out.
    #[arg(long, value_enum, default_value_t = Preset::Toy)]
    preset: Preset,
    /// Image directory or manifest.
    #[arg(long)]
    data: Option<PathBuf>,
    #[command(flatten)]
    spec: TaskArgs,
    #[arg(long)]
    iterations: Option<u64>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Adam learning rate for both networks.
    #[arg(long)]
    lr: Option<f64>,
    /// vgg, l1, canny+vgg or canny+l1.
    #[arg(long)]
    loss: Option<LossKind>,
    /// dv1 (autoencoder) or dv2 (binary).
    #[arg(long)]
    disc: Option<DiscKind>,
    /// Edge weight in the content distance.
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    checkpoint_every: Option<u64>,
    /// Tensor file with pretrained feature-extractor filters.
    #[arg(long)]
    feature_weights: Option<PathBuf>,
    #[arg(long, value_enum)]
    recon_mode: Option<ReconModeArg>,
    /// Training fraction when splitting a directory.
    #[arg(long)]
    split: Option<f64>,
    #[arg(long)]
    manifest_seed: Option<u64>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum ReconModeArg {
    Equilibrium,
    StrictLiteral,
}

impl TrainOverrides {
    fn experiment(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::from_json(p, self.preset)?,
            None => ExperimentConfig::with_preset(self.preset),
        };
        if let Some(d) = &self.data {
            cfg.dataset = d.clone();
        }
        if self.spec.any() {
            let spec = self.spec.apply(cfg.train.task)?;
            cfg.train = cfg.train.for_task(spec);
        }
        let t = &mut cfg.train;
        if let Some(v) = self.iterations {
            t.iterations = v;
        }
        if let Some(v) = self.batch_size {
            t.batch_size = v;
        }
        if let Some(v) = self.lr {
            t.adam.lr = v;
        }
        if let Some(v) = self.loss {
            t.loss_kind = v;
        }
        if let Some(v) = self.disc {
            t.disc_kind = v;
        }
        if let Some(v) = self.r {
            t.r = v;
        }
        if let Some(v) = self.seed {
            t.seed = v;
        }
        if let Some(v) = self.checkpoint_every {
            t.checkpoint_every = v;
        }
        if let Some(v) = &self.feature_weights {
            t.feature_weights = Some(v.clone());
        }
        if let Some(v) = self.recon_mode {
            t.recon_mode = match v {
                ReconModeArg::Equilibrium => ReconMode::Equilibrium,
                ReconModeArg::StrictLiteral => ReconMode::StrictLiteral,
            };
        }
        if let Some(v) = self.split {
            cfg.split_frac = v;
        }
        if let Some(v) = self.manifest_seed {
            cfg.manifest_seed = v;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: TrainOverrides,
    /// Output directory for the log, checkpoints and manifest.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Continue from this checkpoint.
    #[arg(long)]
    resume: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Image directory (every image is scored) or manifest (held-out split).
    #[arg(long)]
    data: PathBuf,
    /// Task flags; they default to the checkpoint's task and must match it.
    #[command(flatten)]
    spec: TaskArgs,
    /// Directory for eval.csv and the contact sheet.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Contact sheets for the first N images.
    #[arg(long, default_value_t = 0)]
    grid: usize,
}

#[derive(Args)]
struct EnhanceArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct AblateArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Training steps per cell.
    #[arg(long, default_value_t = iegan_cli::ablate::SMOKE_STEPS)]
    steps: u64,
    /// JSON training config replacing the artifact-removal smoke settings.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    spec: TaskArgs,
    #[arg(long, default_value_t = 0.8)]
    split: f64,
    #[arg(long, default_value_t = 1)]
    manifest_seed: u64,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct GradcheckArgs {
    #[arg(long, default_value_t = 2024)]
    seed: u64,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 500)]
    count: usize,
    #[arg(long, default_value_t = 32)]
    size: usize,
    #[arg(long, default_value_t = 100)]
    seed: u64,
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| HarnessError::Io { path: path.to_path_buf(), source: e })?;
    Ok(())
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| HarnessError::Io { path: path.to_path_buf(), source: e })?;
    Ok(())
}

fn cmd_degrade(a: DegradeArgs) -> Result<()> {
    let base = DegradeSpec::reference(a.spec.task.unwrap_or(Task::Arsr));
    let spec = a.spec.apply(base)?;
    let s = degrade_corpus(&a.input, &a.output, spec, a.split, a.seed)?;
    println!("{} pairs written ({} skipped) for {}", s.written, s.skipped, describe(&spec));
    println!("manifest: {}", s.manifest.display());
    Ok(())
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let mut exp = a.common.experiment()?;
    if let Some(out) = &a.out {
        exp.output = out.clone();
    }
    exp.prepare()?;
    let manifest = manifest_for(&exp.dataset, exp.train.task, exp.split_frac, exp.manifest_seed)?;
    let dataset = Dataset::load(&manifest)?;
    if !exp.dataset.is_file() {
        manifest.write(&exp.output.join(MANIFEST_FILE))?;
    }
    let config_json = serde_json::to_string_pretty(&exp).expect("config serializes");
    write(&exp.output.join("experiment.json"), &config_json)?;
    println!(
        "training {} on {} images ({} held out) for {} steps",
        describe(&exp.train.task),
        dataset.train.len(),
        dataset.eval.len(),
        exp.train.iterations
    );
    let summary = match &a.resume {
        Some(ckpt) => resume(ckpt, exp.train.clone(), &dataset, &exp.output)?,
        None => train(exp.train.clone(), &dataset, &exp.output)?,
    };
    if let Some(last) = summary.history.last() {
        println!("step {} f_loss {:.6} k {:.6}", last.step, last.f_loss, last.k);
    }
    println!("log: {}", summary.log_path.display());
    println!("checkpoint: {}", summary.final_checkpoint.display());
    Ok(())
}

fn cmd_eval_main(a: EvalArgs) -> Result<()> {
    let spec = if a.spec.any() {
        let (config, _) = load_generator(&a.checkpoint)?;
        Some(a.spec.apply(config.task)?)
    } else {
        None
    };
    let report = cmd_eval(&a.checkpoint, &a.data, spec, eval_threads())?;
    print!("{}", report.to_table());
    if let Some(out) = &a.out {
        create_dir(out)?;
        write(&out.join("eval.csv"), &report.to_csv())?;
        if a.grid > 0 {
            write_grids(&a, &report, out)?;
        }
    }
    Ok(())
}

fn write_grids(a: &EvalArgs, report: &EvalReport, out: &Path) -> Result<()> {
    let (config, generator) = load_generator(&a.checkpoint)?;
    let split = if a.data.is_file() { 0.8 } else { 0.0 };
    let manifest = manifest_for(&a.data, report.spec, split, 0)?;
    let mut pairs = eval_pairs(&Dataset::load(&manifest)?)?;
    pairs.sort_by(|x, y| x.name.cmp(&y.name));
    debug_assert_eq!(config.task, report.spec);
    for p in pairs.iter().take(a.grid) {
        let restored = iegan_cli::enhance::enhance(&generator, &p.lr)?;
        let base = baseline(p, &report.spec)?;
        let stem = Path::new(&p.name).file_stem().and_then(|s| s.to_str()).unwrap_or("image");
        emit_grid(
            &[p.lr.clone(), base, restored, p.gt.clone()],
            &["input", baseline_label(&report.spec), "model", "ground truth"],
            &out.join(format!("grid_{stem}.png")),
        )?;
    }
    Ok(())
}

fn cmd_ablate(a: AblateArgs) -> Result<()> {
    let mut base = match &a.config {
        Some(p) => ExperimentConfig::from_json(p, Preset::Toy)?.train,
        None => smoke_config(),
    };
    if a.spec.any() {
        base = base.clone().for_task(a.spec.apply(base.task)?);
    }
    base.iterations = a.steps;
    base.checkpoint_every = 0;
    if let Some(s) = a.seed {
        base.seed = s;
    }
    base.validate()?;
    create_dir(&a.out)?;
    let manifest = manifest_for(&a.data, base.task, a.split, a.manifest_seed)?;
    let dataset = Dataset::load(&manifest)?;
    let summary = run_ablation(&base, &dataset, &a.out, eval_threads())?;
    write(&a.out.join("ablation.csv"), &summary.to_csv())?;
    write(&a.out.join("ablation.txt"), &summary.to_table())?;
    print!("{}", summary.to_table());
    println!("{} metric values over {} held-out images", summary.metric_values().len(), summary.images);
    Ok(())
}

fn cmd_gradcheck(a: GradcheckArgs) -> Result<()> {
    let cases = gradsuite::run(a.seed)?;
    let mut failed = Vec::new();
    for c in &cases {
        let status = if c.passed() { "ok" } else { "FAIL" };
        println!("{:<20} {:>11.3e}  < {:.0e}  {status}", c.name, c.max_relative_error, c.threshold);
        if !c.passed() {
            failed.push(c.name.clone());
        }
    }
    if !failed.is_empty() {
        return Err(HarnessError::CheckFailed(format!("gradient check failed for {}", failed.join(", "))).into());
    }
    println!("{} cases passed", cases.len());
    Ok(())
}

fn cmd_synth(a: SynthArgs) -> Result<()> {
    let files = write_synthetic_corpus(&a.output, a.count, a.size, a.seed).context("writing synthetic corpus")?;
    println!("{} images written to {}", files.len(), a.output.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Degrade(a) => cmd_degrade(a),
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval_main(a),
        Command::Enhance(a) => {
            let out = cmd_enhance(&a.checkpoint, &a.input, &a.output)?;
            println!("{}x{} written to {}", out.width(), out.height(), a.output.display());
            Ok(())
        }
        Command::Ablate(a) => cmd_ablate(a),
        Command::Gradcheck(a) => cmd_gradcheck(a),
        Command::Synth(a) => cmd_synth(a),
    }
}

/// The error chain, skipping causes whose text a wrapper already includes.
fn message(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if !out.contains(&text) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&text);
        }
    }
    out
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", message(&e));
            ExitCode::from(exit_status(&e) as u8)
        }
    }
}
