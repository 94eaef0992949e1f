use indexmap::IndexMap;
use iegan_tensor::Tensor;
use serde::{Deserialize, Serialize};

use crate::params::ParamSet;
use crate::{CoreError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { lr: 1e-4, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.lr > 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.eps > 0.0;
        if !ok {
            return Err(CoreError::contract("adam", format!("invalid hyperparameters {self:?}")));
        }
        Ok(())
    }
}

/// Bias-corrected Adam. Moments are kept per trainable parameter; arithmetic
/// is done in `f64` and stored as `f32`.
#[derive(Clone, Debug, PartialEq)]
pub struct Adam {
    pub config: AdamConfig,
    /// Updates applied so far.
    pub t: u64,
    pub m: IndexMap<String, Tensor<f32>>,
    pub v: IndexMap<String, Tensor<f32>>,
}

impl Adam {
    pub fn new(config: AdamConfig, params: &ParamSet) -> Self {
        let zeros = |_: ()| -> IndexMap<String, Tensor<f32>> {
            params
                .trainable_names()
                .map(|n| (n.to_string(), Tensor::zeros(params.get(n).expect("listed").shape())))
                .collect()
        };
        Adam { config, t: 0, m: zeros(()), v: zeros(()) }
    }

    /// Applies one update. Parameters without a gradient are treated as
    /// having a zero gradient. `step` only labels errors.
    pub fn update(&mut self, params: &mut ParamSet, grads: &IndexMap<String, Tensor<f32>>, step: u64) -> Result<()> {
        for (name, g) in grads {
            if let Some(bad) = g.data().iter().position(|v| !v.is_finite()) {
                return Err(CoreError::NonFinite {
                    what: "gradient",
                    step,
                    detail: format!("{name}[{bad}] = {}", g.data()[bad]),
                });
            }
        }
        let AdamConfig { lr, beta1, beta2, eps } = self.config;
        self.t += 1;
        let c1 = 1.0 - beta1.powf(self.t as f64);
        let c2 = 1.0 - beta2.powf(self.t as f64);
        for (name, m) in self.m.iter_mut() {
            let v = self.v.get_mut(name).expect("moments share keys");
            let p = params.get_mut(name)?;
            let g = grads.get(name);
            if let Some(g) = g {
                if g.shape() != p.shape() {
                    return Err(CoreError::contract(
                        "adam",
                        format!("gradient for {name} has shape {:?}, parameter {:?}", g.shape(), p.shape()),
                    ));
                }
            }
            for i in 0..p.len() {
                let gi = g.map_or(0.0, |g| g.data()[i] as f64);
                let mi = beta1 * m.data()[i] as f64 + (1.0 - beta1) * gi;
                let vi = beta2 * v.data()[i] as f64 + (1.0 - beta2) * gi * gi;
                m.data_mut()[i] = mi as f32;
                v.data_mut()[i] = vi as f32;
                let step = lr * (mi / c1) / ((vi / c2).sqrt() + eps);
                p.data_mut()[i] = (p.data()[i] as f64 - step) as f32;
            }
        }
        Ok(())
    }
}
