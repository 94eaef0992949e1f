use std::path::PathBuf;

use iegan_imaging::degrade::{DegradeSpec, Task};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::AdamConfig;
use crate::losses::{FeatureConfig, KState, LossKind, DEFAULT_R};
use crate::models::{DiscAeConfig, DiscBinaryConfig, DiscKind, GeneratorConfig};
use crate::{CoreError, Result};

/// Which pairs the autoencoder discriminator compares.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReconMode {
    /// Each input against its own reconstruction.
    #[default]
    Equilibrium,
    /// `D(gt)` against `D(G(gt))` and `D(lr)` against `D(G(lr))`; only defined
    /// when input and output share a size.
    StrictLiteral,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub task: DegradeSpec,
    pub generator: GeneratorConfig,
    pub disc_kind: DiscKind,
    pub disc_widths: [usize; 3],
    /// Dense width of the binary discriminator.
    pub disc_hidden: usize,
    pub features: FeatureConfig,
    pub feature_seed: u64,
    /// Tensor file replacing the seeded feature filters.
    pub feature_weights: Option<PathBuf>,
    pub loss_kind: LossKind,
    pub recon_mode: ReconMode,
    pub adam: AdamConfig,
    pub r: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub batch_size: usize,
    pub iterations: u64,
    /// Checkpoint period in steps; 0 writes only the final checkpoint.
    pub checkpoint_every: u64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            task: DegradeSpec::reference(Task::Arsr),
            generator: GeneratorConfig { p: 2, ..GeneratorConfig::default() },
            disc_kind: DiscKind::Dv1,
            disc_widths: DiscAeConfig::default().widths,
            disc_hidden: DiscBinaryConfig::default().hidden,
            features: FeatureConfig::default(),
            feature_seed: 0x1e6a,
            feature_weights: None,
            loss_kind: LossKind::CannyVgg,
            recon_mode: ReconMode::Equilibrium,
            adam: AdamConfig::default(),
            r: DEFAULT_R,
            lambda: KState::default().lambda,
            gamma: KState::default().gamma,
            batch_size: 16,
            iterations: 2000,
            checkpoint_every: 500,
            seed: 7,
        }
    }
}

impl TrainConfig {
    /// Desk-scale joint task: quality 10, scale 2, 32x32 patches.
    pub fn toy() -> Self {
        TrainConfig {
            task: DegradeSpec::new(Task::Arsr, 10, 2, 32).expect("valid toy spec"),
            generator: GeneratorConfig { base_channels: 16, depth: 1, p: 1, in_channels: 3, out_channels: 3 },
            disc_widths: [8, 16, 32],
            disc_hidden: 64,
            features: FeatureConfig::toy(),
            adam: AdamConfig { lr: 2e-3, ..AdamConfig::default() },
            batch_size: 4,
            checkpoint_every: 1000,
            ..TrainConfig::default()
        }
    }

    /// Rebuilds the generator tail so that its upscaling matches the task.
    pub fn for_task(mut self, task: DegradeSpec) -> Self {
        self.generator.p = task.scale.trailing_zeros() as usize;
        self.task = task;
        self
    }

    pub fn disc_ae(&self) -> DiscAeConfig {
        DiscAeConfig { in_channels: self.generator.out_channels, widths: self.disc_widths }
    }

    pub fn disc_binary(&self) -> DiscBinaryConfig {
        DiscBinaryConfig {
            in_channels: self.generator.out_channels,
            widths: self.disc_widths,
            hidden: self.disc_hidden,
            patch: self.task.patch,
        }
    }

    pub fn k_state(&self) -> KState {
        KState { k: 0.0, lambda: self.lambda, gamma: self.gamma }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |detail: String| Err(CoreError::contract("train_config", detail));
        self.task.validate()?;
        self.generator.validate()?;
        self.adam.validate()?;
        if self.generator.upscale() != self.task.scale {
            return bad(format!("generator upscales by {} but the task scale is {}", self.generator.upscale(), self.task.scale));
        }
        if self.task.lr_patch() % self.generator.multiple() != 0 {
            return bad(format!(
                "input patch {} is not a multiple of {}",
                self.task.lr_patch(),
                self.generator.multiple()
            ));
        }
        if self.task.patch % 8 != 0 {
            return bad(format!("patch {} must be divisible by 8 for the discriminator", self.task.patch));
        }
        if !(0.0..=1.0).contains(&self.r) {
            return bad(format!("r = {} outside [0, 1]", self.r));
        }
        if !(self.lambda > 0.0) || !(self.gamma > 0.0) {
            return bad(format!("lambda {} and gamma {} must be positive", self.lambda, self.gamma));
        }
        if self.batch_size == 0 {
            return bad("batch size must be positive".into());
        }
        if self.recon_mode == ReconMode::StrictLiteral && (self.disc_kind != DiscKind::Dv1 || self.task.scale != 1) {
            return bad("strict-literal reconstruction needs Dv1 and a same-size (ar) task".into());
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, ignoring run-length settings.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.iterations = 0;
        c.checkpoint_every = 0;
        let json = serde_json::to_string(&c).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}
