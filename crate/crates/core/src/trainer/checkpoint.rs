use std::path::Path;

use indexmap::IndexMap;
use iegan_tensor::Tensor;
use serde_json::json;

use super::{TrainConfig, TrainState};
use crate::losses::KState;
use crate::models::Generator;
use crate::params::ParamSet;
use crate::tensorfile::TensorFile;
use crate::{CoreError, Result};

pub const CHECKPOINT_FORMAT: &str = "iegan-checkpoint-1";

fn put(file: &mut TensorFile, prefix: &str, tensors: impl IntoIterator<Item = (String, Tensor<f32>)>) {
    for (name, t) in tensors {
        file.tensors.insert(format!("{prefix}{name}"), t);
    }
}

fn take(file: &TensorFile, prefix: &str) -> IndexMap<String, Tensor<f32>> {
    file.tensors
        .iter()
        .filter_map(|(k, v)| k.strip_prefix(prefix).map(|s| (s.to_string(), v.clone())))
        .collect()
}

/// Copy stored values into `target`, which must have exactly the same names
/// and shapes.
fn restore(target: &mut ParamSet, stored: IndexMap<String, Tensor<f32>>, what: &str) -> Result<()> {
    let names: Vec<String> = target.names().map(String::from).collect();
    if names.len() != stored.len() {
        return Err(CoreError::format("checkpoint", 0, format!("{what}: {} tensors, expected {}", stored.len(), names.len())));
    }
    for name in names {
        let src = stored
            .get(&name)
            .ok_or_else(|| CoreError::format("checkpoint", 0, format!("{what}: missing {name}")))?;
        let dst = target.get_mut(&name)?;
        if dst.shape() != src.shape() {
            return Err(CoreError::format("checkpoint", 0, format!("{what}: {name} has shape {:?}", src.shape())));
        }
        *dst = src.clone();
    }
    Ok(())
}

fn restore_moments(target: &mut IndexMap<String, Tensor<f32>>, stored: IndexMap<String, Tensor<f32>>, what: &str) -> Result<()> {
    let mut set = ParamSet::new();
    for (k, v) in target.iter() {
        set.insert(k.clone(), v.clone())?;
    }
    restore(&mut set, stored, what)?;
    for (k, v) in target.iter_mut() {
        *v = set.get(k)?.clone();
    }
    Ok(())
}

fn meta_u64(meta: &serde_json::Value, key: &str) -> Result<u64> {
    meta.get(key)
        .and_then(|v| v.as_u64())
        .ok_or_else(|| CoreError::format("checkpoint", 0, format!("metadata lacks {key}")))
}

fn read_config(file: &TensorFile) -> Result<TrainConfig> {
    if file.meta.get("format").and_then(|v| v.as_str()) != Some(CHECKPOINT_FORMAT) {
        return Err(CoreError::format("checkpoint", 0, "not a training checkpoint"));
    }
    let config = file.meta.get("config").cloned().unwrap_or_default();
    serde_json::from_value(config).map_err(|e| CoreError::Json { what: "checkpoint config".into(), source: e })
}

impl TrainState {
    pub fn to_file(&self) -> TensorFile {
        let mut f = TensorFile::new(json!({
            "format": CHECKPOINT_FORMAT,
            "step": self.step,
            "k_bits": self.k.k.to_bits(),
            "k": self.k.k,
            "adam_g_t": self.adam_g.t,
            "adam_d_t": self.adam_d.t,
            "config_hash": self.config.hash(),
            "config": self.config,
            "task": self.config.task.task.to_string(),
            "rng": { "seed": self.config.seed, "step": self.step },
        }));
        put(&mut f, "g.", self.generator.params.iter().map(|(k, v)| (k.to_string(), v.clone())));
        put(&mut f, "d.", self.discriminator.params().iter().map(|(k, v)| (k.to_string(), v.clone())));
        put(&mut f, "adam.g.m.", self.adam_g.m.clone());
        put(&mut f, "adam.g.v.", self.adam_g.v.clone());
        put(&mut f, "adam.d.m.", self.adam_d.m.clone());
        put(&mut f, "adam.d.v.", self.adam_d.v.clone());
        f
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.to_file().write(path)
    }

    /// Restores a state written with [`TrainState::save`] under its own
    /// configuration.
    pub fn load(path: &Path) -> Result<Self> {
        let file = TensorFile::read(path)?;
        let config = read_config(&file)?;
        Self::from_file(&file, config)
    }

    /// Restores a state for continued training under `config`, which must
    /// hash identically to the stored configuration (run-length settings may
    /// differ).
    pub fn resume_from(path: &Path, config: TrainConfig) -> Result<Self> {
        let file = TensorFile::read(path)?;
        let stored = file.meta.get("config_hash").and_then(|v| v.as_str()).unwrap_or_default().to_string();
        if stored != config.hash() {
            return Err(CoreError::ConfigMismatch { expected: config.hash(), found: stored });
        }
        Self::from_file(&file, config)
    }

    fn from_file(file: &TensorFile, config: TrainConfig) -> Result<Self> {
        let mut state = TrainState::new(config)?;
        restore(&mut state.generator.params, take(file, "g."), "generator")?;
        restore(state.discriminator.params_mut(), take(file, "d."), "discriminator")?;
        let m = &file.meta;
        for (adam, tag) in [(&mut state.adam_g, "g"), (&mut state.adam_d, "d")] {
            restore_moments(&mut adam.m, take(file, &format!("adam.{tag}.m.")), "adam moments")?;
            restore_moments(&mut adam.v, take(file, &format!("adam.{tag}.v.")), "adam moments")?;
            adam.t = meta_u64(m, &format!("adam_{tag}_t"))?;
        }
        state.step = meta_u64(m, "step")?;
        state.k = KState { k: f64::from_bits(meta_u64(m, "k_bits")?), ..state.k };
        Ok(state)
    }
}

/// Generator and configuration from a checkpoint, for inference.
pub fn load_generator(path: &Path) -> Result<(TrainConfig, Generator)> {
    let file = TensorFile::read(path)?;
    let config = read_config(&file)?;
    let mut gen = Generator::build(config.generator, 0)?;
    restore(&mut gen.params, take(&file, "g."), "generator")?;
    Ok((config, gen))
}
