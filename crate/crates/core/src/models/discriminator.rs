use iegan_tensor::{Graph, Real, Tensor, TensorError, Var};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{conv, LRELU_SLOPE};
use crate::params::{Bound, ParamSet};
use crate::{CoreError, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiscKind {
    /// Autoencoder discriminator.
    #[default]
    Dv1,
    /// Binary real/fake classifier.
    Dv2,
}

impl std::fmt::Display for DiscKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DiscKind::Dv1 => "Dv1",
            DiscKind::Dv2 => "Dv2",
        })
    }
}

impl std::str::FromStr for DiscKind {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dv1" | "ae" => Ok(DiscKind::Dv1),
            "dv2" | "binary" => Ok(DiscKind::Dv2),
            other => Err(CoreError::contract("disc_kind", format!("unknown discriminator {other:?}"))),
        }
    }
}

/// Encoder widths shared by both variants: each width gets a stride-1 and a
/// stride-2 convolution.
fn add_encoder(p: &mut ParamSet, rng: &mut ChaCha8Rng, cin: usize, widths: [usize; 3]) -> Result<()> {
    let mut c = cin;
    for (i, &w) in widths.iter().enumerate() {
        p.add_conv(rng, &format!("enc{}", 2 * i), c, w, 3, true)?;
        p.add_conv(rng, &format!("enc{}", 2 * i + 1), w, w, 3, true)?;
        c = w;
    }
    Ok(())
}

fn encoder<T: Real>(g: &mut Graph<T>, b: &Bound, mut x: Var) -> Result<Var> {
    for i in 0..6 {
        x = conv(g, b, &format!("enc{i}"), x, 1 + i % 2, true)?;
        x = g.leaky_relu(x, LRELU_SLOPE)?;
    }
    Ok(x)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DiscAeConfig {
    pub in_channels: usize,
    pub widths: [usize; 3],
}

impl Default for DiscAeConfig {
    fn default() -> Self {
        DiscAeConfig { in_channels: 3, widths: [64, 128, 256] }
    }
}

/// Autoencoder discriminator with 18 convolutions: six encoder layers
/// (stride 1/2 per width), three bottleneck layers, three pixel-shuffle
/// decoder stages of two layers each, two full-resolution layers and a linear
/// 3x3 head. Inputs must be divisible by 8.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscAe {
    pub config: DiscAeConfig,
    pub params: ParamSet,
}

pub const AE_BOTTLENECK: usize = 3;
pub const AE_TAIL: usize = 2;

impl DiscAe {
    pub fn build(config: DiscAeConfig, seed: u64) -> Result<Self> {
        if config.in_channels == 0 || config.widths.contains(&0) {
            return Err(CoreError::contract("disc_ae", format!("degenerate config {config:?}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = ParamSet::new();
        let [w0, w1, w2] = config.widths;
        add_encoder(&mut p, &mut rng, config.in_channels, config.widths)?;
        for i in 0..AE_BOTTLENECK {
            p.add_conv(&mut rng, &format!("mid{i}"), w2, w2, 3, true)?;
        }
        for (j, (wi, wo)) in [(w2, w1), (w1, w0), (w0, w0)].into_iter().enumerate() {
            p.add_conv(&mut rng, &format!("dec{j}.expand"), wi, 4 * wi, 3, true)?;
            p.add_conv(&mut rng, &format!("dec{j}.reduce"), wi, wo, 3, true)?;
        }
        for i in 0..AE_TAIL {
            p.add_conv(&mut rng, &format!("tail{i}"), w0, w0, 3, true)?;
        }
        p.add_conv(&mut rng, "head", w0, config.in_channels, 3, true)?;
        Ok(DiscAe { config, params: p })
    }

    /// Reconstruction of `x`, same shape, unbounded.
    pub fn forward<T: Real>(&self, g: &mut Graph<T>, b: &Bound, x: Var) -> Result<Var> {
        let s = g.shape(x).to_vec();
        if s.len() != 4 || s[1] != self.config.in_channels || s[2] % 8 != 0 || s[3] % 8 != 0 {
            return Err(CoreError::Tensor(TensorError::Dimension {
                op: "disc_ae",
                detail: format!("expected [n, {}, 8k, 8m], got {s:?}", self.config.in_channels),
            }));
        }
        let mut h = encoder(g, b, x)?;
        for i in 0..AE_BOTTLENECK {
            h = conv(g, b, &format!("mid{i}"), h, 1, true)?;
            h = g.leaky_relu(h, LRELU_SLOPE)?;
        }
        for j in 0..3 {
            h = conv(g, b, &format!("dec{j}.expand"), h, 1, true)?;
            h = g.pixel_shuffle(h, 2)?;
            h = g.leaky_relu(h, LRELU_SLOPE)?;
            h = conv(g, b, &format!("dec{j}.reduce"), h, 1, true)?;
            h = g.leaky_relu(h, LRELU_SLOPE)?;
        }
        for i in 0..AE_TAIL {
            h = conv(g, b, &format!("tail{i}"), h, 1, true)?;
            h = g.leaky_relu(h, LRELU_SLOPE)?;
        }
        conv(g, b, "head", h, 1, true)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DiscBinaryConfig {
    pub in_channels: usize,
    pub widths: [usize; 3],
    pub hidden: usize,
    /// Square input size the dense layers are sized for.
    pub patch: usize,
}

impl Default for DiscBinaryConfig {
    fn default() -> Self {
        DiscBinaryConfig { in_channels: 3, widths: [64, 128, 256], hidden: 1024, patch: 96 }
    }
}

/// Binary discriminator: the same six-layer strided encoder, then a dense
/// leaky-ReLU layer and a single logit.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscBinary {
    pub config: DiscBinaryConfig,
    pub params: ParamSet,
}

impl DiscBinary {
    pub fn build(config: DiscBinaryConfig, seed: u64) -> Result<Self> {
        if config.patch == 0 || config.patch % 8 != 0 || config.hidden == 0 || config.widths.contains(&0) {
            return Err(CoreError::contract("disc_binary", format!("invalid config {config:?}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = ParamSet::new();
        add_encoder(&mut p, &mut rng, config.in_channels, config.widths)?;
        let side = config.patch / 8;
        p.add_linear(&mut rng, "fc1", config.widths[2] * side * side, config.hidden)?;
        p.add_linear(&mut rng, "fc2", config.hidden, 1)?;
        Ok(DiscBinary { config, params: p })
    }

    /// Logits `[n, 1]`.
    pub fn logits<T: Real>(&self, g: &mut Graph<T>, b: &Bound, x: Var) -> Result<Var> {
        let s = g.shape(x).to_vec();
        let c = &self.config;
        if s.len() != 4 || s[1] != c.in_channels || s[2] != c.patch || s[3] != c.patch {
            return Err(CoreError::Tensor(TensorError::Dimension {
                op: "disc_binary",
                detail: format!("expected [n, {}, {}, {}], got {s:?}", c.in_channels, c.patch, c.patch),
            }));
        }
        let h = encoder(g, b, x)?;
        let feat = g.shape(h)[1..].iter().product();
        let h = g.reshape(h, &[s[0], feat])?;
        let h = g.linear(h, b.get("fc1.weight")?, Some(b.get("fc1.bias")?))?;
        let h = g.leaky_relu(h, LRELU_SLOPE)?;
        g.linear(h, b.get("fc2.weight")?, Some(b.get("fc2.bias")?)).map_err(Into::into)
    }

    /// Probability of "real" per image.
    pub fn probability(&self, x: &Tensor<f32>) -> Result<Vec<f32>> {
        let mut g = Graph::<f32>::new();
        let b = self.params.bind(&mut g, false);
        let x = g.constant(x.clone());
        let l = self.logits(&mut g, &b, x)?;
        let p = g.sigmoid(l)?;
        Ok(g.value(p).data().to_vec())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Discriminator {
    Ae(DiscAe),
    Binary(DiscBinary),
}

impl Discriminator {
    pub fn kind(&self) -> DiscKind {
        match self {
            Discriminator::Ae(_) => DiscKind::Dv1,
            Discriminator::Binary(_) => DiscKind::Dv2,
        }
    }

    pub fn params(&self) -> &ParamSet {
        match self {
            Discriminator::Ae(d) => &d.params,
            Discriminator::Binary(d) => &d.params,
        }
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        match self {
            Discriminator::Ae(d) => &mut d.params,
            Discriminator::Binary(d) => &mut d.params,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::conv_layer_count;

    fn toy_ae() -> DiscAe {
        DiscAe::build(DiscAeConfig { in_channels: 3, widths: [4, 8, 8] }, 5).unwrap()
    }

    #[test]
    fn autoencoder_has_eighteen_convs() {
        assert_eq!(conv_layer_count(&DiscAe::build(DiscAeConfig::default(), 0).unwrap().params), 18);
        assert_eq!(conv_layer_count(&toy_ae().params), 18);
    }

    #[test]
    fn autoencoder_preserves_shape_and_reaches_first_layer() {
        let d = toy_ae();
        let mut g = Graph::<f32>::new();
        let b = d.params.bind(&mut g, true);
        let x = g.constant(Tensor::from_fn(&[2, 3, 16, 8], |i| ((i * 7919) % 13) as f32 / 6.0 - 1.0));
        let y = d.forward(&mut g, &b, x).unwrap();
        assert_eq!(g.shape(y), &[2, 3, 16, 8]);
        let sq = g.square(y).unwrap();
        let loss = g.sum(sq).unwrap();
        let grads = g.backward(loss).unwrap();
        let first = grads.get(b.get("enc0.weight").unwrap()).unwrap();
        assert!(first.data().iter().any(|&v| v != 0.0));
    }

    #[test]
    fn autoencoder_rejects_indivisible_input() {
        let d = toy_ae();
        let mut g = Graph::<f32>::new();
        let b = d.params.bind(&mut g, false);
        let x = g.constant(Tensor::zeros(&[1, 3, 12, 16]));
        assert!(d.forward(&mut g, &b, x).is_err());
    }

    #[test]
    fn rebuild_is_identical() {
        assert_eq!(toy_ae(), toy_ae());
    }

    fn toy_binary() -> DiscBinary {
        DiscBinary::build(DiscBinaryConfig { in_channels: 3, widths: [4, 8, 8], hidden: 16, patch: 16 }, 2).unwrap()
    }

    #[test]
    fn zero_weights_give_one_half() {
        let mut d = toy_binary();
        let names: Vec<String> = d.params.names().map(String::from).collect();
        for n in names {
            d.params.get_mut(&n).unwrap().data_mut().fill(0.0);
        }
        let p = d.probability(&Tensor::from_fn(&[3, 3, 16, 16], |i| (i as f32).sin())).unwrap();
        assert_eq!(p, vec![0.5; 3]);
    }

    #[test]
    fn probabilities_are_in_unit_interval() {
        let d = toy_binary();
        let p = d.probability(&Tensor::from_fn(&[4, 3, 16, 16], |i| (i as f32 * 0.1).cos() * 3.0)).unwrap();
        assert!(p.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn wrong_patch_size_is_a_dimension_error() {
        let d = toy_binary();
        assert!(matches!(
            d.probability(&Tensor::zeros(&[1, 3, 24, 24])),
            Err(CoreError::Tensor(TensorError::Dimension { .. }))
        ));
    }
}
