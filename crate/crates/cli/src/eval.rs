use std::fmt::Write as _;
use std::path::Path;

use iegan_core::data::{Dataset, Sample};
use iegan_core::models::Generator;
use iegan_core::trainer::load_generator;
use iegan_core::CoreError;
use iegan_imaging::degrade::{bicubic_resize, make_pair, DegradeSpec, Task};
use iegan_imaging::metrics::{score_images, MetricMode, MetricReport, Scores};
use iegan_imaging::ImageBuffer;
use rayon::prelude::*;

use crate::corpus::load_dataset;
use crate::enhance::enhance;
use crate::{HarnessError, Result};

/// One held-out image: degraded input and its ground truth.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalPair {
    pub name: String,
    pub lr: ImageBuffer,
    pub gt: ImageBuffer,
}

impl EvalPair {
    pub fn from_sample(sample: &Sample, spec: &DegradeSpec) -> Result<Self> {
        let name = sample.path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let (lr, gt) = match &sample.lr {
            Some(lr) => {
                let s = spec.scale;
                (lr.clone(), sample.gt.crop(0, 0, lr.width() * s, lr.height() * s)?)
            }
            None => make_pair(&sample.gt, spec)?,
        };
        Ok(EvalPair { name, lr, gt })
    }
}

/// What a model-free method would produce: bicubic upscaling for tasks that
/// shrink the image, the degraded input itself otherwise.
pub fn baseline(pair: &EvalPair, spec: &DegradeSpec) -> Result<ImageBuffer> {
    if spec.task.downscales() {
        Ok(bicubic_resize(&pair.lr, pair.gt.width(), pair.gt.height())?.clamp_unit())
    } else {
        Ok(pair.lr.clone())
    }
}

pub fn baseline_label(spec: &DegradeSpec) -> &'static str {
    match spec.task {
        Task::Ar => "identity",
        Task::Sr | Task::Arsr => "bicubic",
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub spec: DegradeSpec,
    pub model: MetricReport,
    pub baseline: MetricReport,
}

impl EvalReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,file,psnr,ssim,gmsd,haarpsi\n");
        for (label, report) in [("model", &self.model), (baseline_label(&self.spec), &self.baseline)] {
            for line in report.to_csv().lines().skip(1) {
                let _ = writeln!(out, "{label},{line}");
            }
        }
        out
    }

    pub fn to_table(&self) -> String {
        let mut out = String::from("model\n");
        out.push_str(&self.model.to_table());
        let _ = writeln!(out, "\n{}", baseline_label(&self.spec));
        out.push_str(&self.baseline.to_table());
        out
    }

    /// Images where the model's HaarPSI beats the baseline's.
    pub fn haarpsi_wins(&self) -> usize {
        self.model
            .rows
            .iter()
            .zip(&self.baseline.rows)
            .filter(|(m, b)| m.scores.haarpsi > b.scores.haarpsi)
            .count()
    }
}

fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        b = b.num_threads(n);
    }
    b.build().map_err(|e| HarnessError::Contract(format!("cannot start worker pool: {e}")))
}

/// Scores every pair for the model and the baseline, in input order.
pub fn evaluate(generator: &Generator, pairs: &[EvalPair], spec: &DegradeSpec, threads: Option<usize>) -> Result<EvalReport> {
    if generator.config.upscale() != spec.scale {
        return Err(HarnessError::Contract(format!(
            "generator upscales by {} but the task scale is {}",
            generator.config.upscale(),
            spec.scale
        )));
    }
    let rows: Vec<(String, Scores, Scores)> = pool(threads)?.install(|| {
        pairs
            .par_iter()
            .map(|p| {
                let out = enhance(generator, &p.lr)?;
                let m = score_images(&p.gt, &out, MetricMode::Luma)?;
                let b = score_images(&p.gt, &baseline(p, spec)?, MetricMode::Luma)?;
                Ok((p.name.clone(), m, b))
            })
            .collect::<Result<_>>()
    })?;
    let mut report = EvalReport { spec: *spec, model: MetricReport::default(), baseline: MetricReport::default() };
    for (name, m, b) in rows {
        report.model.push(name.clone(), m);
        report.baseline.push(name, b);
    }
    Ok(report)
}

pub fn eval_pairs(dataset: &Dataset) -> Result<Vec<EvalPair>> {
    dataset.eval.iter().map(|s| EvalPair::from_sample(s, &dataset.spec)).collect()
}

/// Evaluates a checkpoint on every image of a directory, or on the held-out
/// split of a manifest. `spec` defaults to the checkpoint's task and must
/// match it when given.
pub fn cmd_eval(checkpoint: &Path, source: &Path, spec: Option<DegradeSpec>, threads: Option<usize>) -> Result<EvalReport> {
    let (config, generator) = load_generator(checkpoint)?;
    let spec = spec.unwrap_or(config.task);
    if spec != config.task {
        return Err(CoreError::TaskMismatch { checkpoint: describe(&config.task), requested: describe(&spec) }.into());
    }
    let split = if source.is_file() { 0.8 } else { 0.0 };
    let (_, dataset) = load_dataset(source, spec, split, 0)?;
    let mut pairs = eval_pairs(&dataset)?;
    pairs.sort_by(|a, b| a.name.cmp(&b.name));
    evaluate(&generator, &pairs, &spec, threads)
}

pub fn describe(spec: &DegradeSpec) -> String {
    format!("{} (quality {}, scale {}, patch {})", spec.task, spec.quality, spec.scale, spec.patch)
}
