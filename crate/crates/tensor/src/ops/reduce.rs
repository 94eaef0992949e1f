use crate::graph::{Graph, Var};
use crate::kernels;
use crate::ops::Op;
use crate::{Real, Result, Tensor, TensorError};

/// Per-sample divisor recorded by [`Graph::max_normalize`].
#[derive(Clone, Copy, Debug)]
pub(crate) struct SampleScale {
    divisor: f64,
    /// Flat index of the maximum when the maximum exceeded the floor.
    argmax: Option<usize>,
}

impl<T: Real> Graph<T> {
    pub fn sum(&mut self, input: Var) -> Result<Var> {
        let s = kernels::sum(self.value(input).data());
        self.push(Tensor::scalar(T::from_f64(s)), Op::Sum { input }, "sum")
    }

    pub fn mean(&mut self, input: Var) -> Result<Var> {
        let v = self.value(input);
        let m = kernels::sum(v.data()) / v.len() as f64;
        self.push(Tensor::scalar(T::from_f64(m)), Op::Mean { input }, "mean")
    }

    /// `bias + sum_i c_i * x_i` over equally shaped inputs, evaluated in `f64`
    /// and rounded once.
    pub fn combine(&mut self, terms: &[(Var, f64)], bias: f64) -> Result<Var> {
        let Some(&(first, _)) = terms.first() else {
            return Err(TensorError::contract("combine", "no terms"));
        };
        let shape = self.shape(first).to_vec();
        let mut acc = vec![bias; self.value(first).len()];
        for &(v, c) in terms {
            if self.shape(v) != shape.as_slice() {
                return Err(TensorError::dim("combine", format!("{:?} vs {:?}", self.shape(v), shape)));
            }
            kernels::axpy(&mut acc, c, self.value(v).data());
        }
        let value = Tensor::from_fn(&shape, |i| T::from_f64(acc[i]));
        self.push(value, Op::Combine { terms: terms.to_vec() }, "combine")
    }

    /// Divides each sample (leading axis) by `max(floor, max(sample))`.
    pub fn max_normalize(&mut self, input: Var, floor: f64) -> Result<Var> {
        let v = self.value(input);
        let shape = v.shape().to_vec();
        if shape.is_empty() {
            return Err(TensorError::dim("max_normalize", "needs a leading sample axis"));
        }
        let per = v.len() / shape[0];
        let mut out = vec![T::ZERO; v.len()];
        let mut scales = Vec::with_capacity(shape[0]);
        for (s, chunk) in v.data().chunks(per).enumerate() {
            let (mut best, mut arg) = (f64::NEG_INFINITY, 0);
            for (i, x) in chunk.iter().enumerate() {
                if x.to_f64() > best {
                    best = x.to_f64();
                    arg = i;
                }
            }
            let scale = if best > floor {
                SampleScale { divisor: best, argmax: Some(s * per + arg) }
            } else {
                SampleScale { divisor: floor, argmax: None }
            };
            for (o, x) in out[s * per..(s + 1) * per].iter_mut().zip(chunk) {
                *o = T::from_f64(x.to_f64() / scale.divisor);
            }
            scales.push(scale);
        }
        let value = Tensor::new(&shape, out)?;
        self.push(value, Op::MaxNormalize { input, scales }, "max_normalize")
    }
}

pub(crate) fn max_normalize_backward<T: Real>(x: &Tensor<T>, scales: &[SampleScale], g_out: &Tensor<T>) -> Tensor<T> {
    let per = x.len() / scales.len();
    let mut dx = vec![T::ZERO; x.len()];
    for (s, scale) in scales.iter().enumerate() {
        let r = s * per..(s + 1) * per;
        let m = scale.divisor;
        for i in r.clone() {
            dx[i] = T::from_f64(g_out.data()[i].to_f64() / m);
        }
        if let Some(a) = scale.argmax {
            // y_i = x_i / x_a  =>  dL/dx_a -= sum_j g_j x_j / x_a^2
            let coupling = kernels::dot(&g_out.data()[r.clone()], &x.data()[r]) / (m * m);
            dx[a] = T::from_f64(dx[a].to_f64() - coupling);
        }
    }
    Tensor::new(x.shape(), dx).expect("same shape")
}
