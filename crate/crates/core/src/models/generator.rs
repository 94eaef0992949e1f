use iegan_tensor::{Graph, NormMode, Real, Tensor, Var};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{batch_norm, conv, LRELU_SLOPE};
use crate::params::{Bound, ParamSet};
use crate::{CoreError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub base_channels: usize,
    /// Encoder levels; inputs must be divisible by `2^depth`.
    pub depth: usize,
    /// Output is `2^p` times the input resolution.
    pub p: usize,
    pub in_channels: usize,
    pub out_channels: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig { base_channels: 32, depth: 3, p: 0, in_channels: 3, out_channels: 3 }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.depth == 0 || self.base_channels == 0 || self.in_channels == 0 || self.out_channels == 0 {
            return Err(CoreError::contract("generator", format!("degenerate config {self:?}")));
        }
        if self.p > 2 {
            return Err(CoreError::contract("generator", format!("p must be 0, 1 or 2, got {}", self.p)));
        }
        Ok(())
    }

    pub fn channels(&self, level: usize) -> usize {
        self.base_channels << level
    }

    pub fn multiple(&self) -> usize {
        1 << self.depth
    }

    pub fn upscale(&self) -> usize {
        1 << self.p
    }
}

/// U-Net generator: `depth` encoder levels of two conv/BN/leaky-ReLU blocks,
/// each level after the first entered through a stride-2 convolution, a
/// stride-2 bottleneck, a mirrored decoder that
/// concatenates the matching encoder output, `p` pixel-shuffle stages and a
/// tanh head.
#[derive(Clone, Debug, PartialEq)]
pub struct Generator {
    pub config: GeneratorConfig,
    pub params: ParamSet,
}

fn add_block(p: &mut ParamSet, rng: &mut ChaCha8Rng, prefix: &str, cin: usize, cout: usize) -> Result<()> {
    p.add_conv(rng, &format!("{prefix}.conv1"), cin, cout, 3, false)?;
    p.add_batch_norm(&format!("{prefix}.bn1"), cout)?;
    p.add_conv(rng, &format!("{prefix}.conv2"), cout, cout, 3, false)?;
    p.add_batch_norm(&format!("{prefix}.bn2"), cout)
}

fn block<T: Real>(
    g: &mut Graph<T>,
    b: &Bound,
    params: &mut ParamSet,
    prefix: &str,
    mut x: Var,
    stride: usize,
    mode: NormMode,
) -> Result<Var> {
    for i in 1..=2 {
        x = conv(g, b, &format!("{prefix}.conv{i}"), x, if i == 1 { stride } else { 1 }, false)?;
        x = batch_norm(g, b, params, &format!("{prefix}.bn{i}"), x, mode)?;
        x = g.leaky_relu(x, LRELU_SLOPE)?;
    }
    Ok(x)
}

impl Generator {
    pub fn build(config: GeneratorConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = ParamSet::new();
        let d = config.depth;
        for l in 0..d {
            let cin = if l == 0 { config.in_channels } else { config.channels(l - 1) };
            add_block(&mut p, &mut rng, &format!("enc{l}"), cin, config.channels(l))?;
        }
        let deepest = config.channels(d - 1);
        add_block(&mut p, &mut rng, "mid", deepest, deepest)?;
        for l in (0..d).rev() {
            let below = if l == d - 1 { deepest } else { config.channels(l + 1) };
            add_block(&mut p, &mut rng, &format!("dec{l}"), below + config.channels(l), config.channels(l))?;
        }
        let c0 = config.channels(0);
        for i in 0..config.p {
            p.add_conv(&mut rng, &format!("up{i}.conv"), c0, 4 * c0, 3, true)?;
        }
        p.add_conv(&mut rng, "head", c0, config.out_channels, 3, true)?;
        Ok(Generator { config, params: p })
    }

    pub fn check_input(&self, shape: &[usize]) -> Result<()> {
        let m = self.config.multiple();
        if shape.len() != 4 || shape[1] != self.config.in_channels {
            return Err(CoreError::Tensor(iegan_tensor::TensorError::Dimension {
                op: "generator",
                detail: format!("expected [n, {}, h, w], got {shape:?}", self.config.in_channels),
            }));
        }
        if shape[2] % m != 0 || shape[3] % m != 0 {
            return Err(CoreError::Tensor(iegan_tensor::TensorError::Dimension {
                op: "generator",
                detail: format!("spatial size {}x{} must be a multiple of {m}", shape[2], shape[3]),
            }));
        }
        Ok(())
    }

    /// Records the forward pass of `x` (values in `[-1, 1]`). In train mode
    /// the batch-norm running moments in `params` are updated.
    pub fn forward<T: Real>(&mut self, g: &mut Graph<T>, b: &Bound, x: Var, mode: NormMode) -> Result<Var> {
        self.check_input(g.shape(x))?;
        let d = self.config.depth;
        let mut skips = Vec::with_capacity(d);
        let mut h = x;
        for l in 0..d {
            let stride = if l == 0 { 1 } else { 2 };
            h = block(g, b, &mut self.params, &format!("enc{l}"), h, stride, mode)?;
            skips.push(h);
        }
        h = block(g, b, &mut self.params, "mid", h, 2, mode)?;
        for l in (0..d).rev() {
            h = g.upsample_nearest2(h)?;
            h = g.concat_channels(h, skips[l])?;
            h = block(g, b, &mut self.params, &format!("dec{l}"), h, 1, mode)?;
        }
        for i in 0..self.config.p {
            h = conv(g, b, &format!("up{i}.conv"), h, 1, true)?;
            h = g.pixel_shuffle(h, 2)?;
            h = g.leaky_relu(h, LRELU_SLOPE)?;
        }
        h = conv(g, b, "head", h, 1, true)?;
        Ok(g.tanh(h)?)
    }

    /// Stand-alone inference with running batch-norm statistics.
    pub fn infer(&mut self, input: &Tensor<f32>) -> Result<Tensor<f32>> {
        let mut g = Graph::<f32>::new();
        let b = self.params.bind(&mut g, false);
        let x = g.constant(input.clone());
        let y = self.forward(&mut g, &b, x, NormMode::Eval)?;
        Ok(g.value(y).clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(p: usize) -> GeneratorConfig {
        GeneratorConfig { base_channels: 4, depth: 2, p, in_channels: 3, out_channels: 3 }
    }

    fn run(gen: &mut Generator, x: Tensor<f32>) -> Result<Tensor<f32>> {
        let mut g = Graph::<f32>::new();
        let b = gen.params.bind(&mut g, false);
        let x = g.constant(x);
        let y = gen.forward(&mut g, &b, x, NormMode::Train)?;
        Ok(g.value(y).clone())
    }

    #[test]
    fn shape_laws() {
        for (p, f) in [(0, 1), (1, 2), (2, 4)] {
            let mut gen = Generator::build(small(p), 1).unwrap();
            let y = run(&mut gen, Tensor::zeros(&[2, 3, 8, 12])).unwrap();
            assert_eq!(y.shape(), &[2, 3, 8 * f, 12 * f]);
        }
    }

    #[test]
    fn indivisible_input_names_the_multiple() {
        let mut gen = Generator::build(small(0), 1).unwrap();
        let err = run(&mut gen, Tensor::zeros(&[1, 3, 6, 8])).unwrap_err();
        assert!(err.to_string().contains("multiple of 4"), "{err}");
    }

    #[test]
    fn trunk_is_shared_across_p() {
        let a = Generator::build(small(0), 3).unwrap();
        let b = Generator::build(small(2), 3).unwrap();
        let trunk = |g: &Generator| -> Vec<(String, Vec<usize>)> {
            g.params.iter().filter(|(n, _)| !n.starts_with("up")).map(|(n, t)| (n.to_string(), t.shape().to_vec())).collect()
        };
        assert_eq!(trunk(&a), trunk(&b));
        assert_eq!(b.params.names().filter(|n| n.starts_with("up")).count(), 4);
    }

    #[test]
    fn same_seed_same_params() {
        assert_eq!(Generator::build(small(1), 9).unwrap(), Generator::build(small(1), 9).unwrap());
        assert_ne!(Generator::build(small(1), 9).unwrap(), Generator::build(small(1), 10).unwrap());
    }

    #[test]
    fn zero_head_gives_zero_image() {
        let mut gen = Generator::build(small(1), 2).unwrap();
        gen.params.get_mut("head.weight").unwrap().data_mut().fill(0.0);
        let x = Tensor::from_fn(&[1, 3, 8, 8], |i| (i as f32 * 0.37).sin());
        let y = run(&mut gen, x).unwrap();
        assert!(y.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn eval_before_training_is_rejected() {
        let mut gen = Generator::build(small(0), 2).unwrap();
        assert!(matches!(
            gen.infer(&Tensor::zeros(&[1, 3, 8, 8])),
            Err(CoreError::Tensor(iegan_tensor::TensorError::UninitializedState))
        ));
    }
}
