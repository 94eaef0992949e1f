use std::path::Path;

use iegan_tensor::{Graph, Real, Tensor, Var};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::params::he_uniform;
use crate::tensorfile::TensorFile;
use crate::{CoreError, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub in_channels: usize,
    /// Output channels of the convolutions in each stage.
    pub widths: Vec<usize>,
    pub convs_per_stage: usize,
    /// 1-based `(stage, conv)`: the activation of conv `j` before pooling
    /// layer `i`.
    pub tap: (usize, usize),
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig { in_channels: 3, widths: vec![16, 32, 64, 64], convs_per_stage: 2, tap: (3, 2) }
    }
}

impl FeatureConfig {
    pub fn toy() -> Self {
        FeatureConfig { in_channels: 3, widths: vec![8, 16, 32, 32], convs_per_stage: 1, tap: (1, 1) }
    }
}

#[derive(Clone, Debug, PartialEq)]
struct Layer {
    stage: usize,
    conv: usize,
    weight: Tensor<f32>,
    bias: Tensor<f32>,
}

/// Fixed bank of 3x3 conv + ReLU stages separated by 2x average pooling.
/// Weights never receive gradients.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureExtractor {
    layers: Vec<Layer>,
    tap: (usize, usize),
}

fn layer_name(stage: usize, conv: usize) -> String {
    format!("stage{stage}.conv{conv}")
}

impl FeatureExtractor {
    pub fn build(config: &FeatureConfig, seed: u64) -> Result<Self> {
        if config.widths.is_empty() || config.convs_per_stage == 0 || config.widths.contains(&0) {
            return Err(CoreError::contract("feature_extractor", format!("degenerate config {config:?}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::new();
        let mut cin = config.in_channels;
        for (s, &w) in config.widths.iter().enumerate() {
            for j in 1..=config.convs_per_stage {
                layers.push(Layer {
                    stage: s + 1,
                    conv: j,
                    weight: he_uniform(&mut rng, &[w, cin, 3, 3], cin * 9),
                    bias: Tensor::zeros(&[w]),
                });
                cin = w;
            }
        }
        Self::with_tap(layers, config.tap)
    }

    pub fn build_default(seed: u64) -> Result<Self> {
        Self::build(&FeatureConfig::default(), seed)
    }

    fn with_tap(layers: Vec<Layer>, tap: (usize, usize)) -> Result<Self> {
        if !layers.iter().any(|l| (l.stage, l.conv) == tap) {
            return Err(CoreError::contract("feature_extractor", format!("tap point {tap:?} does not exist")));
        }
        Ok(FeatureExtractor { layers, tap })
    }

    pub fn tap(&self) -> (usize, usize) {
        self.tap
    }

    /// Channels of the tapped feature map.
    pub fn tap_channels(&self) -> usize {
        self.layers.iter().find(|l| (l.stage, l.conv) == self.tap).map(|l| l.weight.shape()[0]).unwrap_or(0)
    }

    /// Replace the filters with those stored in a tensor file holding
    /// `stage{i}.conv{j}.weight` / `.bias` entries. A `"tap": [i, j]` entry in
    /// the file metadata overrides `tap`.
    pub fn import(path: &Path, tap: Option<(usize, usize)>) -> Result<Self> {
        let file = TensorFile::read(path)?;
        let tap = match file.meta.get("tap") {
            Some(v) => serde_json::from_value::<(usize, usize)>(v.clone())
                .map_err(|e| CoreError::format("feature weights", 0, format!("bad tap entry: {e}")))?,
            None => tap.unwrap_or(FeatureConfig::default().tap),
        };
        let mut layers: Vec<Layer> = Vec::new();
        let mut stage = 1;
        loop {
            let mut conv = 1;
            while let Some(w) = file.tensors.get(&format!("{}.weight", layer_name(stage, conv))) {
                let name = layer_name(stage, conv);
                let s = w.shape();
                let cin = layers.last().map(|l| l.weight.shape()[0]).unwrap_or(s.get(1).copied().unwrap_or(0));
                if s.len() != 4 || s[2] != 3 || s[3] != 3 || s[1] != cin {
                    return Err(CoreError::format(
                        "feature weights",
                        0,
                        format!("{name}.weight has shape {s:?}, expected [o, {cin}, 3, 3]"),
                    ));
                }
                let bias = match file.tensors.get(&format!("{name}.bias")) {
                    Some(b) if b.shape() == [s[0]] => b.clone(),
                    Some(b) => {
                        return Err(CoreError::format("feature weights", 0, format!("{name}.bias has shape {:?}", b.shape())))
                    }
                    None => Tensor::zeros(&[s[0]]),
                };
                layers.push(Layer { stage, conv, weight: w.clone(), bias });
                conv += 1;
            }
            if conv == 1 {
                break;
            }
            stage += 1;
        }
        if layers.is_empty() {
            return Err(CoreError::format("feature weights", 0, "no stage1.conv1.weight entry"));
        }
        Self::with_tap(layers, tap)
    }

    pub fn export(&self, path: &Path) -> Result<()> {
        let mut file = TensorFile::new(serde_json::json!({ "tap": [self.tap.0, self.tap.1] }));
        for l in &self.layers {
            file.tensors.insert(format!("{}.weight", layer_name(l.stage, l.conv)), l.weight.clone());
            file.tensors.insert(format!("{}.bias", layer_name(l.stage, l.conv)), l.bias.clone());
        }
        file.write(path)
    }

    /// Tapped feature map of `x` (values in `[0, 1]`).
    pub fn features<T: Real>(&self, g: &mut Graph<T>, x: Var) -> Result<Var> {
        let mut h = x;
        let mut stage = 1;
        for l in &self.layers {
            if l.stage != stage {
                h = g.avg_pool2(h)?;
                stage = l.stage;
            }
            let w = g.constant(l.weight.cast());
            let b = g.constant(l.bias.cast());
            h = g.conv2d(h, w, Some(b), 1, 1)?;
            h = g.relu(h)?;
            if (l.stage, l.conv) == self.tap {
                return Ok(h);
            }
        }
        unreachable!("tap point is validated at construction")
    }
}
