use std::fs;
use std::path::{Path, PathBuf};

use iegan_core::trainer::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::{HarnessError, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Desk-scale ARSR settings.
    #[default]
    Toy,
    /// Full-size networks and the published degradation protocol.
    Reference,
}

impl Preset {
    pub fn config(self) -> TrainConfig {
        match self {
            Preset::Toy => TrainConfig::toy(),
            Preset::Reference => TrainConfig::default(),
        }
    }
}

/// One experiment: where the images are, where results go and how to train.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    /// Image directory, or a manifest written by `degrade`/`train`.
    pub dataset: PathBuf,
    pub output: PathBuf,
    /// Fraction of images used for training; the rest are held out.
    pub split_frac: f64,
    pub manifest_seed: u64,
    pub train: TrainConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: PathBuf::from("data"),
            output: PathBuf::from("runs/latest"),
            split_frac: 0.8,
            manifest_seed: 1,
            train: TrainConfig::toy(),
        }
    }
}

impl ExperimentConfig {
    /// Reads a JSON config. Missing fields take their defaults; a missing
    /// `train` section takes the `preset` values.
    pub fn from_json(path: &Path, preset: Preset) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let json = |source| HarnessError::Json { path: path.to_path_buf(), source };
        let mut value: serde_json::Value = serde_json::from_str(&text).map_err(json)?;
        if let Some(obj) = value.as_object_mut() {
            let mut base = serde_json::to_value(preset.config()).expect("config serializes");
            if let Some(train) = obj.remove("train") {
                merge(&mut base, train);
            }
            obj.insert("train".into(), base);
        }
        serde_json::from_value(value).map_err(json)
    }

    pub fn with_preset(preset: Preset) -> Self {
        ExperimentConfig { train: preset.config(), ..ExperimentConfig::default() }
    }

    /// Checks paths and the training configuration, creating the output
    /// directory.
    pub fn prepare(&self) -> Result<()> {
        if !self.dataset.exists() {
            return Err(HarnessError::io(
                &self.dataset,
                std::io::Error::new(std::io::ErrorKind::NotFound, "dataset not found"),
            ));
        }
        if !(0.0..=1.0).contains(&self.split_frac) {
            return Err(HarnessError::Contract(format!("split fraction {} outside [0, 1]", self.split_frac)));
        }
        self.train.validate()?;
        fs::create_dir_all(&self.output).map_err(|e| HarnessError::io(&self.output, e))
    }
}

/// Recursive object merge; scalars and arrays in `patch` replace `base`.
fn merge(base: &mut serde_json::Value, patch: serde_json::Value) {
    match (base, patch) {
        (serde_json::Value::Object(b), serde_json::Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}
