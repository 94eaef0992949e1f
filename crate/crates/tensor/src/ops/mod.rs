//! Differentiable operations. Each submodule adds recording methods to
//! [`Graph`] and a backward rule dispatched from [`backward`].

pub(crate) mod conv;
pub(crate) mod elementwise;
pub(crate) mod linear;
pub(crate) mod norm;
pub(crate) mod reduce;
pub(crate) mod shape;

use crate::graph::{Graph, Var};
use crate::{Real, Result, Tensor};

pub(crate) enum Op<T> {
    Leaf,
    Conv2d(conv::Conv2dSaved<T>),
    BatchNorm(norm::BatchNormSaved<T>),
    Linear { input: Var, weight: Var, bias: Option<Var> },
    Unary { input: Var, kind: elementwise::Unary },
    Binary { a: Var, b: Var, kind: elementwise::Binary },
    Affine { input: Var, scale: f64 },
    Combine { terms: Vec<(Var, f64)> },
    Sum { input: Var },
    Mean { input: Var },
    MaxNormalize { input: Var, scales: Vec<reduce::SampleScale> },
    Concat { a: Var, b: Var },
    SliceChannels { input: Var, start: usize },
    ReflectPad { input: Var, pad: usize },
    AvgPool2 { input: Var },
    UpsampleNearest2 { input: Var },
    PixelShuffle { input: Var, factor: usize },
    PixelUnshuffle { input: Var, factor: usize },
    Reshape { input: Var },
}

impl<T> Op<T> {
    pub fn inputs(&self) -> Vec<Var> {
        match self {
            Op::Leaf => vec![],
            Op::Conv2d(s) => {
                let mut v = vec![s.input, s.weight];
                v.extend(s.bias);
                v
            }
            Op::BatchNorm(s) => vec![s.input, s.gamma, s.beta],
            Op::Linear { input, weight, bias } => {
                let mut v = vec![*input, *weight];
                v.extend(*bias);
                v
            }
            Op::Binary { a, b, .. } | Op::Concat { a, b } => vec![*a, *b],
            Op::Combine { terms } => terms.iter().map(|t| t.0).collect(),
            Op::Unary { input, .. }
            | Op::Affine { input, .. }
            | Op::Sum { input }
            | Op::Mean { input }
            | Op::MaxNormalize { input, .. }
            | Op::SliceChannels { input, .. }
            | Op::ReflectPad { input, .. }
            | Op::AvgPool2 { input }
            | Op::UpsampleNearest2 { input }
            | Op::PixelShuffle { input, .. }
            | Op::PixelUnshuffle { input, .. }
            | Op::Reshape { input } => vec![*input],
        }
    }
}

pub(crate) fn backward<T: Real>(
    g: &Graph<T>,
    node: usize,
    g_out: &Tensor<T>,
) -> Result<Vec<(Var, Tensor<T>)>> {
    let n = g.node(node);
    let out = &n.value;
    Ok(match &n.op {
        Op::Leaf => Vec::new(),
        Op::Conv2d(saved) => conv::backward(g, saved, g_out),
        Op::BatchNorm(saved) => norm::backward(g, saved, g_out),
        Op::Linear { input, weight, bias } => linear::backward(g, *input, *weight, *bias, g_out),
        Op::Unary { input, kind } => vec![(*input, elementwise::unary_backward(*kind, g.value(*input), out, g_out))],
        Op::Binary { a, b, kind } => elementwise::binary_backward(*kind, *a, *b, g, g_out),
        Op::Affine { input, scale } => vec![(*input, g_out.map(|v| v * scale))],
        Op::Combine { terms } => terms.iter().map(|&(v, c)| (v, g_out.map(|x| x * c))).collect(),
        Op::Sum { input } => vec![(*input, Tensor::full(g.shape(*input), g_out.item()))],
        Op::Mean { input } => {
            let len = g.value(*input).len() as f64;
            let v = T::from_f64(g_out.item().to_f64() / len);
            vec![(*input, Tensor::full(g.shape(*input), v))]
        }
        Op::MaxNormalize { input, scales } => vec![(*input, reduce::max_normalize_backward(g.value(*input), scales, g_out))],
        Op::Concat { a, b } => shape::concat_backward(g, *a, *b, g_out),
        Op::SliceChannels { input, start } => vec![(*input, shape::slice_backward(g.value(*input), *start, g_out))],
        Op::ReflectPad { input, pad } => vec![(*input, shape::reflect_pad_backward(g.value(*input), *pad, g_out))],
        Op::AvgPool2 { input } => vec![(*input, shape::avg_pool2_backward(g.value(*input), g_out))],
        Op::UpsampleNearest2 { input } => vec![(*input, shape::upsample_backward(g.value(*input), g_out))],
        Op::PixelShuffle { input, factor } => vec![(*input, shape::unshuffle_raw(g_out, *factor))],
        Op::PixelUnshuffle { input, factor } => vec![(*input, shape::shuffle_raw(g_out, *factor))],
        Op::Reshape { input } => vec![(*input, Tensor::new(g.shape(*input), g_out.data().to_vec())?)],
    })
}
