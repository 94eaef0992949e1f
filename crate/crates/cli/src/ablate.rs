//! The discriminator x content-loss grid: {Dv1, Dv2} x {VGG, L1, Canny+VGG,
//! Canny+L1}, each cell trained from the same seed and scored on the same
//! held-out images.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use iegan_core::data::Dataset;
use iegan_core::losses::LossKind;
use iegan_core::models::DiscKind;
use iegan_core::trainer::{train, TrainConfig};
use iegan_imaging::degrade::{DegradeSpec, Task};
use iegan_imaging::metrics::Scores;
use serde::{Deserialize, Serialize};

use crate::eval::{eval_pairs, evaluate, EvalPair};
use crate::{HarnessError, Result};

pub const DISCRIMINATORS: [DiscKind; 2] = [DiscKind::Dv1, DiscKind::Dv2];
pub const SMOKE_STEPS: u64 = 100;

/// Artifact-removal toy settings for the grid.
pub fn smoke_config() -> TrainConfig {
    let task = DegradeSpec::new(Task::Ar, 10, 1, 32).expect("valid toy spec");
    TrainConfig { iterations: SMOKE_STEPS, checkpoint_every: 0, ..TrainConfig::toy().for_task(task) }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationCell {
    pub disc: DiscKind,
    pub loss: LossKind,
    /// Means over the held-out images.
    pub scores: Scores,
    pub final_f_loss: f64,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationSummary {
    pub steps: u64,
    pub images: usize,
    pub cells: Vec<AblationCell>,
}

impl AblationSummary {
    pub fn cell(&self, disc: DiscKind, loss: LossKind) -> Option<&AblationCell> {
        self.cells.iter().find(|c| c.disc == disc && c.loss == loss)
    }

    /// Every metric value of every cell, in grid order.
    pub fn metric_values(&self) -> Vec<f64> {
        self.cells
            .iter()
            .flat_map(|c| [c.scores.psnr, c.scores.ssim, c.scores.gmsd, c.scores.haarpsi])
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("discriminator,loss,psnr,ssim,gmsd,haarpsi\n");
        for c in &self.cells {
            let s = c.scores;
            let _ = writeln!(out, "{},{},{},{},{},{}", c.disc, c.loss, s.psnr, s.ssim, s.gmsd, s.haarpsi);
        }
        out
    }

    /// One block per discriminator, one row per loss.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        for d in DISCRIMINATORS {
            let _ = writeln!(out, "{d}");
            let _ = writeln!(out, "  {:<10} {:>9} {:>7} {:>7} {:>8}", "loss", "PSNR", "SSIM", "GMSD", "HaarPSI");
            for c in self.cells.iter().filter(|c| c.disc == d) {
                let s = c.scores;
                let _ = writeln!(
                    out,
                    "  {:<10} {:>9.3} {:>7.4} {:>7.4} {:>8.4}",
                    c.loss.to_string(),
                    s.psnr,
                    s.ssim,
                    s.gmsd,
                    s.haarpsi
                );
            }
        }
        out
    }
}

pub fn cell_dir(out_dir: &Path, disc: DiscKind, loss: LossKind) -> PathBuf {
    let loss = loss.to_string().to_ascii_lowercase().replace('+', "-");
    out_dir.join(format!("{}_{loss}", disc.to_string().to_ascii_lowercase()))
}

/// Trains and scores all eight cells from `base`, which fixes everything but
/// the discriminator and loss kind.
pub fn run_ablation(base: &TrainConfig, dataset: &Dataset, out_dir: &Path, threads: Option<usize>) -> Result<AblationSummary> {
    let pairs: Vec<EvalPair> = eval_pairs(dataset)?;
    if pairs.is_empty() {
        return Err(HarnessError::Contract("the held-out split is empty; lower the split fraction".into()));
    }
    let mut cells = Vec::with_capacity(8);
    for disc in DISCRIMINATORS {
        for loss in LossKind::ALL {
            let cfg = TrainConfig { disc_kind: disc, loss_kind: loss, ..base.clone() };
            log::info!("ablation cell {disc} / {loss}");
            let run = train(cfg, dataset, &cell_dir(out_dir, disc, loss))?;
            let report = evaluate(&run.state.generator, &pairs, &dataset.spec, threads)?;
            let scores = report.model.aggregate().expect("pairs are non-empty");
            cells.push(AblationCell {
                disc,
                loss,
                scores,
                final_f_loss: run.history.last().map(|r| r.f_loss).unwrap_or(f64::NAN),
                seconds: run.seconds,
            });
        }
    }
    Ok(AblationSummary { steps: base.iterations, images: pairs.len(), cells })
}
