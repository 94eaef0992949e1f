use crate::graph::{Graph, Var};
use crate::ops::Op;
use crate::{Real, Result, Tensor, TensorError};

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum Unary {
    LeakyRelu(f64),
    Relu,
    Tanh,
    Sigmoid,
    Softplus,
    Abs,
    Square,
    Sqrt,
}

impl Unary {
    fn name(self) -> &'static str {
        match self {
            Unary::LeakyRelu(_) => "leaky_relu",
            Unary::Relu => "relu",
            Unary::Tanh => "tanh",
            Unary::Sigmoid => "sigmoid",
            Unary::Softplus => "softplus",
            Unary::Abs => "abs",
            Unary::Square => "square",
            Unary::Sqrt => "sqrt",
        }
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            Unary::LeakyRelu(s) => {
                if x > 0.0 {
                    x
                } else {
                    s * x
                }
            }
            Unary::Relu => x.max(0.0),
            Unary::Tanh => x.tanh(),
            Unary::Sigmoid => sigmoid(x),
            Unary::Softplus => x.max(0.0) + (-x.abs()).exp().ln_1p(),
            Unary::Abs => x.abs(),
            Unary::Square => x * x,
            Unary::Sqrt => x.sqrt(),
        }
    }

    /// d(out)/d(in) given the input and the forward output.
    fn derivative(self, x: f64, y: f64) -> f64 {
        match self {
            // The subgradient at exactly zero is the slope.
            Unary::LeakyRelu(s) => {
                if x > 0.0 {
                    1.0
                } else {
                    s
                }
            }
            Unary::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Unary::Tanh => 1.0 - y * y,
            Unary::Sigmoid => y * (1.0 - y),
            Unary::Softplus => sigmoid(x),
            Unary::Abs => {
                if x > 0.0 {
                    1.0
                } else if x < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            Unary::Square => 2.0 * x,
            Unary::Sqrt => 0.5 / y,
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Binary {
    Add,
    Sub,
    Mul,
}

pub(crate) fn unary_backward<T: Real>(kind: Unary, x: &Tensor<T>, y: &Tensor<T>, g_out: &Tensor<T>) -> Tensor<T> {
    let data = x
        .data()
        .iter()
        .zip(y.data())
        .zip(g_out.data())
        .map(|((&xv, &yv), &gv)| T::from_f64(gv.to_f64() * kind.derivative(xv.to_f64(), yv.to_f64())))
        .collect();
    Tensor::new(x.shape(), data).expect("same shape")
}

pub(crate) fn binary_backward<T: Real>(kind: Binary, a: Var, b: Var, g: &Graph<T>, g_out: &Tensor<T>) -> Vec<(Var, Tensor<T>)> {
    match kind {
        Binary::Add => vec![(a, g_out.clone()), (b, g_out.clone())],
        Binary::Sub => vec![(a, g_out.clone()), (b, g_out.map(|v| -v))],
        Binary::Mul => {
            let prod = |other: &Tensor<T>| {
                let data = g_out
                    .data()
                    .iter()
                    .zip(other.data())
                    .map(|(&gv, &ov)| T::from_f64(gv.to_f64() * ov.to_f64()))
                    .collect();
                Tensor::new(g_out.shape(), data).expect("same shape")
            };
            vec![(a, prod(g.value(b))), (b, prod(g.value(a)))]
        }
    }
}

impl<T: Real> Graph<T> {
    fn unary(&mut self, input: Var, kind: Unary) -> Result<Var> {
        let value = self.value(input).map(|v| kind.apply(v));
        self.push(value, Op::Unary { input, kind }, kind.name())
    }

    /// `max(x, slope * x)` with `slope` in (0, 1).
    pub fn leaky_relu(&mut self, input: Var, slope: f64) -> Result<Var> {
        if !(slope > 0.0 && slope < 1.0) {
            return Err(TensorError::contract("leaky_relu", format!("slope must be in (0, 1), got {slope}")));
        }
        self.unary(input, Unary::LeakyRelu(slope))
    }

    pub fn relu(&mut self, input: Var) -> Result<Var> {
        self.unary(input, Unary::Relu)
    }

    pub fn tanh(&mut self, input: Var) -> Result<Var> {
        self.unary(input, Unary::Tanh)
    }

    pub fn sigmoid(&mut self, input: Var) -> Result<Var> {
        self.unary(input, Unary::Sigmoid)
    }

    /// `ln(1 + e^x)`, evaluated without overflow.
    pub fn softplus(&mut self, input: Var) -> Result<Var> {
        self.unary(input, Unary::Softplus)
    }

    pub fn abs(&mut self, input: Var) -> Result<Var> {
        self.unary(input, Unary::Abs)
    }

    pub fn square(&mut self, input: Var) -> Result<Var> {
        self.unary(input, Unary::Square)
    }

    pub fn sqrt(&mut self, input: Var) -> Result<Var> {
        self.unary(input, Unary::Sqrt)
    }

    fn binary(&mut self, a: Var, b: Var, kind: Binary, name: &'static str) -> Result<Var> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.shape() != vb.shape() {
            return Err(TensorError::dim(name, format!("{:?} vs {:?}", va.shape(), vb.shape())));
        }
        let data = va
            .data()
            .iter()
            .zip(vb.data())
            .map(|(&x, &y)| {
                let (x, y) = (x.to_f64(), y.to_f64());
                T::from_f64(match kind {
                    Binary::Add => x + y,
                    Binary::Sub => x - y,
                    Binary::Mul => x * y,
                })
            })
            .collect();
        let value = Tensor::new(va.shape(), data)?;
        self.push(value, Op::Binary { a, b, kind }, name)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, Binary::Add, "add")
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, Binary::Sub, "sub")
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, Binary::Mul, "mul")
    }

    /// `scale * x + shift` with constant coefficients.
    pub fn affine(&mut self, input: Var, scale: f64, shift: f64) -> Result<Var> {
        let value = self.value(input).map(|v| scale * v + shift);
        self.push(value, Op::Affine { input, scale }, "affine")
    }

    pub fn scale(&mut self, input: Var, factor: f64) -> Result<Var> {
        self.affine(input, factor, 0.0)
    }

    pub fn add_scalar(&mut self, input: Var, shift: f64) -> Result<Var> {
        self.affine(input, 1.0, shift)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn leaky_relu_definition() {
        let mut g = Graph::<f64>::new();
        let x = g.leaf(Tensor::new(&[3], vec![-1.0, 0.0, 2.0]).unwrap(), true);
        let y = g.leaky_relu(x, 0.2).unwrap();
        assert_eq!(g.value(y).data(), &[-0.2, 0.0, 2.0]);
        let s = g.sum(y).unwrap();
        let grads = g.backward(s).unwrap();
        assert_eq!(grads.get(x).unwrap().data(), &[0.2, 0.2, 1.0]);
    }

    #[test]
    fn leaky_relu_identity_on_positive() {
        let mut g = Graph::<f32>::new();
        let data = Tensor::from_fn(&[5], |i| i as f32 + 0.5);
        let x = g.constant(data.clone());
        let y = g.leaky_relu(x, 0.2).unwrap();
        assert_eq!(g.value(y), &data);
    }

    #[test]
    fn slope_out_of_range_rejected() {
        let mut g = Graph::<f32>::new();
        let x = g.constant(Tensor::zeros(&[1]));
        assert!(g.leaky_relu(x, 1.5).is_err());
    }

    #[test]
    fn softplus_is_stable() {
        let mut g = Graph::<f64>::new();
        let x = g.constant(Tensor::new(&[3], vec![-800.0, 0.0, 800.0]).unwrap());
        let y = g.softplus(x).unwrap();
        let v = g.value(y).data();
        assert_eq!(v[0], 0.0);
        assert!((v[1] - 2f64.ln()).abs() < 1e-15);
        assert_eq!(v[2], 800.0);
    }

    #[test]
    fn mismatched_shapes_rejected() {
        let mut g = Graph::<f32>::new();
        let a = g.constant(Tensor::zeros(&[2]));
        let b = g.constant(Tensor::zeros(&[3]));
        assert!(matches!(g.add(a, b), Err(TensorError::Dimension { .. })));
    }
}
