//! Generator and the two discriminator variants. Forward passes are generic
//! over the graph precision so the same code serves training and gradient
//! checks.

mod discriminator;
mod generator;

pub use discriminator::{DiscAe, DiscAeConfig, DiscBinary, DiscBinaryConfig, DiscKind, Discriminator};
pub use generator::{Generator, GeneratorConfig};

use iegan_tensor::{Graph, NormMode, Real, Var};

use crate::params::{Bound, ParamSet};
use crate::Result;

pub const LRELU_SLOPE: f64 = 0.2;

/// Number of convolution layers, counted as 4-D weight tensors.
pub fn conv_layer_count(params: &ParamSet) -> usize {
    params.iter().filter(|(n, t)| n.ends_with(".weight") && t.shape().len() == 4).count()
}

pub(crate) fn conv<T: Real>(g: &mut Graph<T>, b: &Bound, prefix: &str, x: Var, stride: usize, bias: bool) -> Result<Var> {
    let w = b.get(&format!("{prefix}.weight"))?;
    let bias = if bias { Some(b.get(&format!("{prefix}.bias"))?) } else { None };
    let k = g.shape(w)[2];
    Ok(g.conv2d(x, w, bias, stride, k / 2)?)
}

pub(crate) fn batch_norm<T: Real>(
    g: &mut Graph<T>,
    b: &Bound,
    params: &mut ParamSet,
    prefix: &str,
    x: Var,
    mode: NormMode,
) -> Result<Var> {
    let mut m = params.moments(prefix)?;
    let y = g.batch_norm(x, b.get(&format!("{prefix}.gamma"))?, b.get(&format!("{prefix}.beta"))?, &mut m, mode)?;
    if mode == NormMode::Train {
        params.store_moments(prefix, &m)?;
    }
    Ok(y)
}
