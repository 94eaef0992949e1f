//! Named parameter collections and their binding onto a graph.

use indexmap::IndexMap;
use iegan_tensor::{Graph, Real, RunningMoments, Tensor, Var, BN_EPSILON, BN_MOMENTUM};
use rand::Rng;
use sha2::{Digest, Sha256};

use crate::{CoreError, Result};

const BUFFER_SUFFIXES: [&str; 3] = [".running_mean", ".running_var", ".updates"];

/// Batch-norm bookkeeping entries are stored alongside weights but never
/// optimized.
pub fn is_buffer(name: &str) -> bool {
    BUFFER_SUFFIXES.iter().any(|s| name.ends_with(s))
}

/// Ordered `name -> tensor` map. Insertion order is the canonical order for
/// serialization and optimizer state.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamSet {
    tensors: IndexMap<String, Tensor<f32>>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, tensor: Tensor<f32>) -> Result<()> {
        let name = name.into();
        if self.tensors.contains_key(&name) {
            return Err(CoreError::contract("param_set", format!("duplicate parameter {name}")));
        }
        self.tensors.insert(name, tensor);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&Tensor<f32>> {
        self.tensors.get(name).ok_or_else(|| CoreError::MissingParam(name.to_string()))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut Tensor<f32>> {
        self.tensors.get_mut(name).ok_or_else(|| CoreError::MissingParam(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.tensors.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor<f32>)> {
        self.tensors.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.tensors.keys().map(String::as_str)
    }

    pub fn trainable_names(&self) -> impl Iterator<Item = &str> {
        self.names().filter(|n| !is_buffer(n))
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    /// Number of trainable scalars.
    pub fn count_trainable(&self) -> usize {
        self.iter().filter(|(n, _)| !is_buffer(n)).map(|(_, t)| t.len()).sum()
    }

    /// Register conv weights `[o, i, k, k]` with He-uniform values.
    pub fn add_conv(&mut self, rng: &mut impl Rng, prefix: &str, cin: usize, cout: usize, k: usize, bias: bool) -> Result<()> {
        self.insert(format!("{prefix}.weight"), he_uniform(rng, &[cout, cin, k, k], cin * k * k))?;
        if bias {
            self.insert(format!("{prefix}.bias"), Tensor::zeros(&[cout]))?;
        }
        Ok(())
    }

    pub fn add_linear(&mut self, rng: &mut impl Rng, prefix: &str, fin: usize, fout: usize) -> Result<()> {
        self.insert(format!("{prefix}.weight"), he_uniform(rng, &[fout, fin], fin))?;
        self.insert(format!("{prefix}.bias"), Tensor::zeros(&[fout]))
    }

    pub fn add_batch_norm(&mut self, prefix: &str, c: usize) -> Result<()> {
        self.insert(format!("{prefix}.gamma"), Tensor::full(&[c], 1.0))?;
        self.insert(format!("{prefix}.beta"), Tensor::zeros(&[c]))?;
        self.insert(format!("{prefix}.running_mean"), Tensor::zeros(&[c]))?;
        self.insert(format!("{prefix}.running_var"), Tensor::full(&[c], 1.0))?;
        self.insert(format!("{prefix}.updates"), Tensor::scalar(0.0))
    }

    pub fn moments(&self, prefix: &str) -> Result<RunningMoments> {
        Ok(RunningMoments {
            mean: self.get(&format!("{prefix}.running_mean"))?.data().to_vec(),
            var: self.get(&format!("{prefix}.running_var"))?.data().to_vec(),
            updates: self.get(&format!("{prefix}.updates"))?.item() as u64,
            momentum: BN_MOMENTUM,
            eps: BN_EPSILON,
        })
    }

    pub fn store_moments(&mut self, prefix: &str, m: &RunningMoments) -> Result<()> {
        self.get_mut(&format!("{prefix}.running_mean"))?.data_mut().copy_from_slice(&m.mean);
        self.get_mut(&format!("{prefix}.running_var"))?.data_mut().copy_from_slice(&m.var);
        self.get_mut(&format!("{prefix}.updates"))?.data_mut()[0] = m.updates as f32;
        Ok(())
    }

    /// Record every tensor on `g`. Trainable entries become gradient leaves
    /// when `trainable` is set; buffers are always constants.
    pub fn bind<T: Real>(&self, g: &mut Graph<T>, trainable: bool) -> Bound {
        let vars = self
            .iter()
            .map(|(name, t)| {
                let v = if trainable && !is_buffer(name) { g.leaf(t.cast(), true) } else { g.constant(t.cast()) };
                (name.to_string(), v)
            })
            .collect();
        Bound { vars }
    }

    /// SHA-256 over names, shapes and little-endian values.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for (name, t) in self.iter() {
            h.update(name.as_bytes());
            for &d in t.shape() {
                h.update((d as u64).to_le_bytes());
            }
            for v in t.data() {
                h.update(v.to_le_bytes());
            }
        }
        hex::encode(h.finalize())
    }

    /// Entries whose name starts with `prefix`, with the prefix removed.
    pub fn with_prefix_stripped(&self, prefix: &str) -> ParamSet {
        ParamSet {
            tensors: self
                .tensors
                .iter()
                .filter_map(|(k, v)| k.strip_prefix(prefix).map(|s| (s.to_string(), v.clone())))
                .collect(),
        }
    }

    pub fn prefixed<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = (String, &'a Tensor<f32>)> + 'a {
        self.tensors.iter().map(move |(k, v)| (format!("{prefix}{k}"), v))
    }

    /// True when both sets hold the same names with the same shapes.
    pub fn same_layout(&self, other: &ParamSet) -> bool {
        self.len() == other.len()
            && self.iter().zip(other.iter()).all(|((a, ta), (b, tb))| a == b && ta.shape() == tb.shape())
    }
}

/// He-uniform initialization: `U(-b, b)` with `b = sqrt(6 / fan_in)`.
pub fn he_uniform(rng: &mut impl Rng, shape: &[usize], fan_in: usize) -> Tensor<f32> {
    let bound = (6.0 / fan_in as f64).sqrt();
    Tensor::from_fn(shape, |_| rng.gen_range(-bound..bound) as f32)
}

/// Graph handles for a [`ParamSet`], looked up by name.
#[derive(Clone, Debug, Default)]
pub struct Bound {
    vars: IndexMap<String, Var>,
}

impl Bound {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (String, Var)>) -> Self {
        Bound { vars: pairs.into_iter().collect() }
    }

    pub fn get(&self, name: &str) -> Result<Var> {
        self.vars.get(name).copied().ok_or_else(|| CoreError::MissingParam(name.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Var)> {
        self.vars.iter().map(|(k, &v)| (k.as_str(), v))
    }

    /// Gradients of every bound leaf that has one, as `f32`.
    pub fn gradients<T: Real>(&self, grads: &iegan_tensor::Gradients<T>) -> IndexMap<String, Tensor<f32>> {
        self.vars
            .iter()
            .filter_map(|(k, &v)| grads.get(v).map(|t| (k.clone(), t.cast())))
            .collect()
    }
}
