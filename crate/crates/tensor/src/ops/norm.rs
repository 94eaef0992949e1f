//! Per-channel batch normalization over N, H and W.

use crate::graph::{Graph, Var};
use crate::kernels::{dot, sum};
use crate::ops::Op;
use crate::{Real, Result, Tensor, TensorError};

pub const BN_MOMENTUM: f64 = 0.9;
pub const BN_EPSILON: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormMode {
    /// Normalize with batch statistics and fold them into the running moments.
    Train,
    /// Normalize with the running moments.
    Eval,
}

/// Running per-channel mean and variance used in eval mode.
///
/// Update rule: `running = momentum * running + (1 - momentum) * batch`, with
/// the unbiased batch variance.
#[derive(Clone, Debug, PartialEq)]
pub struct RunningMoments {
    pub mean: Vec<f32>,
    pub var: Vec<f32>,
    /// Number of train-mode updates folded in so far.
    pub updates: u64,
    pub momentum: f64,
    pub eps: f64,
}

impl RunningMoments {
    pub fn new(channels: usize) -> Self {
        RunningMoments {
            mean: vec![0.0; channels],
            var: vec![1.0; channels],
            updates: 0,
            momentum: BN_MOMENTUM,
            eps: BN_EPSILON,
        }
    }

    pub fn is_initialized(&self) -> bool {
        self.updates > 0
    }

    fn update(&mut self, mean: &[f64], unbiased_var: &[f64]) {
        let m = self.momentum;
        for (r, &b) in self.mean.iter_mut().zip(mean) {
            *r = (m * *r as f64 + (1.0 - m) * b) as f32;
        }
        for (r, &b) in self.var.iter_mut().zip(unbiased_var) {
            *r = (m * *r as f64 + (1.0 - m) * b) as f32;
        }
        self.updates += 1;
    }
}

pub(crate) struct BatchNormSaved<T> {
    pub input: Var,
    pub gamma: Var,
    pub beta: Var,
    xhat: Vec<T>,
    inv_std: Vec<f64>,
    mode: NormMode,
}

impl<T: Real> Graph<T> {
    pub fn batch_norm(
        &mut self,
        input: Var,
        gamma: Var,
        beta: Var,
        state: &mut RunningMoments,
        mode: NormMode,
    ) -> Result<Var> {
        let [n, c, h, w] = self.value(input).dims4("batch_norm")?;
        for (name, v) in [("gamma", gamma), ("beta", beta)] {
            if self.shape(v) != [c] {
                return Err(TensorError::dim(
                    "batch_norm",
                    format!("{name} {:?} does not match input {:?}", self.shape(v), self.shape(input)),
                ));
            }
        }
        if state.mean.len() != c || state.var.len() != c {
            return Err(TensorError::dim(
                "batch_norm",
                format!("running moments have {} channels, input {:?}", state.mean.len(), self.shape(input)),
            ));
        }
        if mode == NormMode::Eval && !state.is_initialized() {
            return Err(TensorError::UninitializedState);
        }

        let hw = h * w;
        let count = (n * hw) as f64;
        let x = self.value(input).data();
        let mut mean = vec![0.0; c];
        let mut var = vec![0.0; c];
        match mode {
            NormMode::Train => {
                for ch in 0..c {
                    let mut s = 0.0;
                    for img in 0..n {
                        s += sum(&x[(img * c + ch) * hw..(img * c + ch + 1) * hw]);
                    }
                    let mu = s / count;
                    let mut sq = 0.0;
                    for img in 0..n {
                        for &v in &x[(img * c + ch) * hw..(img * c + ch + 1) * hw] {
                            let d = v.to_f64() - mu;
                            sq += d * d;
                        }
                    }
                    mean[ch] = mu;
                    var[ch] = sq / count;
                }
            }
            NormMode::Eval => {
                for ch in 0..c {
                    mean[ch] = state.mean[ch] as f64;
                    var[ch] = state.var[ch] as f64;
                }
            }
        }

        let eps = state.eps;
        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + eps).sqrt()).collect();
        let gm = self.value(gamma).data();
        let bt = self.value(beta).data();
        let mut out = vec![T::ZERO; x.len()];
        let mut xhat = vec![T::ZERO; x.len()];
        for img in 0..n {
            for ch in 0..c {
                let (gv, bv) = (gm[ch].to_f64(), bt[ch].to_f64());
                let base = (img * c + ch) * hw;
                for i in base..base + hw {
                    let xh = (x[i].to_f64() - mean[ch]) * inv_std[ch];
                    xhat[i] = T::from_f64(xh);
                    out[i] = T::from_f64(gv * xh + bv);
                }
            }
        }

        if mode == NormMode::Train {
            let unbiased: Vec<f64> = if count > 1.0 {
                var.iter().map(|v| v * count / (count - 1.0)).collect()
            } else {
                var.clone()
            };
            state.update(&mean, &unbiased);
        }

        let value = Tensor::new(&[n, c, h, w], out)?;
        let saved = BatchNormSaved { input, gamma, beta, xhat, inv_std, mode };
        self.push(value, Op::BatchNorm(saved), "batch_norm")
    }
}

pub(crate) fn backward<T: Real>(g: &Graph<T>, s: &BatchNormSaved<T>, g_out: &Tensor<T>) -> Vec<(Var, Tensor<T>)> {
    let [n, c, h, w] = g.value(s.input).dims4("batch_norm").expect("recorded shape");
    let hw = h * w;
    let count = (n * hw) as f64;
    let dy = g_out.data();
    let gm = g.value(s.gamma).data();

    let mut dgamma = vec![0.0; c];
    let mut dbeta = vec![0.0; c];
    for img in 0..n {
        for ch in 0..c {
            let r = (img * c + ch) * hw..(img * c + ch + 1) * hw;
            dbeta[ch] += sum(&dy[r.clone()]);
            dgamma[ch] += dot(&dy[r.clone()], &s.xhat[r]);
        }
    }

    let mut result = Vec::new();
    if g.requires_grad(s.input) {
        let mut dx = vec![T::ZERO; dy.len()];
        for img in 0..n {
            for ch in 0..c {
                let scale = gm[ch].to_f64() * s.inv_std[ch];
                let base = (img * c + ch) * hw;
                for i in base..base + hw {
                    let v = match s.mode {
                        NormMode::Train => {
                            scale * (dy[i].to_f64() - dbeta[ch] / count - s.xhat[i].to_f64() * dgamma[ch] / count)
                        }
                        NormMode::Eval => scale * dy[i].to_f64(),
                    };
                    dx[i] = T::from_f64(v);
                }
            }
        }
        result.push((s.input, Tensor::new(&[n, c, h, w], dx).expect("input shape")));
    }
    result.push((s.gamma, Tensor::from_fn(&[c], |i| T::from_f64(dgamma[i]))));
    result.push((s.beta, Tensor::from_fn(&[c], |i| T::from_f64(dbeta[i]))));
    result
}

#[cfg(test)]
mod tests {
    use super::*;

    fn affine(g: &mut Graph<f64>, c: usize) -> (Var, Var) {
        (g.constant(Tensor::full(&[c], 1.0)), g.constant(Tensor::zeros(&[c])))
    }

    #[test]
    fn constant_channel_maps_to_beta() {
        let mut g = Graph::<f64>::new();
        let x = g.constant(Tensor::full(&[2, 1, 3, 3], 4.2));
        let gamma = g.constant(Tensor::full(&[1], 2.0));
        let beta = g.constant(Tensor::full(&[1], 0.7));
        let mut st = RunningMoments::new(1);
        let y = g.batch_norm(x, gamma, beta, &mut st, NormMode::Train).unwrap();
        assert!(g.value(y).data().iter().all(|&v| (v - 0.7).abs() < 1e-12));
    }

    #[test]
    fn standardized_input_passes_through() {
        let mut g = Graph::<f64>::new();
        let data: Vec<f64> = (0..8).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let x = g.constant(Tensor::new(&[2, 1, 2, 2], data.clone()).unwrap());
        let (gamma, beta) = affine(&mut g, 1);
        let mut st = RunningMoments::new(1);
        let y = g.batch_norm(x, gamma, beta, &mut st, NormMode::Train).unwrap();
        for (a, b) in g.value(y).data().iter().zip(&data) {
            // variance 1 plus epsilon
            assert!((a - b).abs() < 1e-5, "{a} vs {b}");
        }
    }

    #[test]
    fn eval_before_train_is_an_error() {
        let mut g = Graph::<f64>::new();
        let x = g.constant(Tensor::zeros(&[1, 2, 2, 2]));
        let (gamma, beta) = affine(&mut g, 2);
        let mut st = RunningMoments::new(2);
        assert_eq!(
            g.batch_norm(x, gamma, beta, &mut st, NormMode::Eval).unwrap_err(),
            TensorError::UninitializedState
        );
    }

    #[test]
    fn running_moments_follow_momentum() {
        let mut g = Graph::<f64>::new();
        let x = g.constant(Tensor::new(&[1, 1, 1, 2], vec![1.0, 3.0]).unwrap());
        let (gamma, beta) = affine(&mut g, 1);
        let mut st = RunningMoments::new(1);
        g.batch_norm(x, gamma, beta, &mut st, NormMode::Train).unwrap();
        // batch mean 2, unbiased variance 2
        assert!((st.mean[0] - 0.2).abs() < 1e-7);
        assert!((st.var[0] - (0.9 + 0.2)).abs() < 1e-6);
        assert_eq!(st.updates, 1);
        let y = g.batch_norm(x, gamma, beta, &mut st, NormMode::Eval).unwrap();
        let expect = (1.0 - 0.2) / (1.1f64 + 1e-5).sqrt();
        assert!((g.value(y).data()[0] - expect).abs() < 1e-6);
    }
}
