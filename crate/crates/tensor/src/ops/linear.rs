use crate::graph::{Graph, Var};
use crate::kernels::{axpy, dot};
use crate::ops::Op;
use crate::{Real, Result, Tensor, TensorError};

impl<T: Real> Graph<T> {
    /// Dense layer: `input [N, F]`, `weight [O, F]`, `bias [O]` -> `[N, O]`.
    pub fn linear(&mut self, input: Var, weight: Var, bias: Option<Var>) -> Result<Var> {
        let (xs, ws) = (self.shape(input), self.shape(weight));
        let (&[n, f], &[o, fw]) = (xs, ws) else {
            return Err(TensorError::dim("linear", format!("input {xs:?}, weight {ws:?}")));
        };
        if f != fw {
            return Err(TensorError::dim("linear", format!("input {xs:?} incompatible with weight {ws:?}")));
        }
        if let Some(b) = bias {
            if self.shape(b) != [o] {
                return Err(TensorError::dim("linear", format!("bias {:?} vs weight {ws:?}", self.shape(b))));
            }
        }
        let x = self.value(input).data();
        let w = self.value(weight).data();
        let mut out = vec![T::ZERO; n * o];
        for i in 0..n {
            for j in 0..o {
                let b = bias.map_or(0.0, |b| self.value(b).data()[j].to_f64());
                out[i * o + j] = T::from_f64(b + dot(&x[i * f..(i + 1) * f], &w[j * f..(j + 1) * f]));
            }
        }
        let value = Tensor::new(&[n, o], out)?;
        self.push(value, Op::Linear { input, weight, bias }, "linear")
    }
}

pub(crate) fn backward<T: Real>(g: &Graph<T>, input: Var, weight: Var, bias: Option<Var>, g_out: &Tensor<T>) -> Vec<(Var, Tensor<T>)> {
    let (n, f) = (g.shape(input)[0], g.shape(input)[1]);
    let o = g.shape(weight)[0];
    let x = g.value(input).data();
    let w = g.value(weight).data();
    let dy = g_out.data();
    let mut result = Vec::new();
    if g.requires_grad(input) {
        let mut dx = vec![0.0; n * f];
        for i in 0..n {
            for j in 0..o {
                axpy(&mut dx[i * f..(i + 1) * f], dy[i * o + j].to_f64(), &w[j * f..(j + 1) * f]);
            }
        }
        result.push((input, Tensor::from_fn(&[n, f], |k| T::from_f64(dx[k]))));
    }
    if g.requires_grad(weight) {
        let mut dw = vec![0.0; o * f];
        for i in 0..n {
            for j in 0..o {
                axpy(&mut dw[j * f..(j + 1) * f], dy[i * o + j].to_f64(), &x[i * f..(i + 1) * f]);
            }
        }
        result.push((weight, Tensor::from_fn(&[o, f], |k| T::from_f64(dw[k]))));
    }
    if let Some(b) = bias {
        let db: Vec<f64> = (0..o).map(|j| (0..n).map(|i| dy[i * o + j].to_f64()).sum()).collect();
        result.push((b, Tensor::from_fn(&[o], |k| T::from_f64(db[k]))));
    }
    result
}
