//! Differentiable edge strength used by the training-time edge loss, and the
//! binary Canny counterpart for evaluation.

use iegan_imaging::canny::{canny, CannyParams};
use iegan_imaging::color::{luminance, LUMA_WEIGHTS};
use iegan_imaging::filter::{gaussian_kernel, SOBEL_X, SOBEL_Y};
use iegan_imaging::ImageBuffer;
use iegan_tensor::{Graph, Real, Tensor, Var};

use crate::{CoreError, Result};

pub const SOFT_EDGE_EPS: f64 = 1e-6;
pub const SOFT_EDGE_SIGMA: f64 = 0.3;

fn constant<T: Real>(g: &mut Graph<T>, shape: &[usize], values: &[f64]) -> Result<Var> {
    Ok(g.constant(Tensor::new(shape, values.iter().map(|&v| T::from_f64(v)).collect())?))
}

/// Luminance of an `[n, 3, h, w]` batch in `[0, 1]`; single-channel input is
/// passed through.
pub fn luma<T: Real>(g: &mut Graph<T>, x: Var) -> Result<Var> {
    match g.shape(x).get(1) {
        Some(1) => Ok(x),
        Some(3) => {
            let w = constant(g, &[1, 3, 1, 1], &LUMA_WEIGHTS)?;
            Ok(g.conv2d(x, w, None, 1, 0)?)
        }
        _ => Err(CoreError::contract("luma", format!("expected 1 or 3 channels, got {:?}", g.shape(x)))),
    }
}

/// Smooth gradient magnitude `sqrt(gx^2 + gy^2 + eps^2)` of the Gaussian
/// blurred luminance, with mirrored borders, divided per image by
/// `max(1, image max)`. Output `[n, 1, h, w]` in `[0, 1]`.
pub fn soft_edge<T: Real>(g: &mut Graph<T>, x: Var, sigma: f64) -> Result<Var> {
    let y = luma(g, x)?;
    let taps = gaussian_kernel(3, sigma)?;
    let blur: Vec<f64> = (0..9).map(|i| taps[i / 3] * taps[i % 3]).collect();
    let blur_w = constant(g, &[1, 1, 3, 3], &blur)?;
    let sobel: Vec<f64> = SOBEL_X.iter().chain(&SOBEL_Y).flatten().copied().collect();
    let sobel_w = constant(g, &[2, 1, 3, 3], &sobel)?;
    let sum_w = constant(g, &[1, 2, 1, 1], &[1.0, 1.0])?;

    let p = g.reflect_pad(y, 1)?;
    let b = g.conv2d(p, blur_w, None, 1, 0)?;
    let p = g.reflect_pad(b, 1)?;
    let grad = g.conv2d(p, sobel_w, None, 1, 0)?;
    let sq = g.square(grad)?;
    let s = g.conv2d(sq, sum_w, None, 1, 0)?;
    let s = g.add_scalar(s, SOFT_EDGE_EPS * SOFT_EDGE_EPS)?;
    let mag = g.sqrt(s)?;
    Ok(g.max_normalize(mag, 1.0)?)
}

/// Mean absolute difference of binary Canny maps of the two luminances.
pub fn binary_edge_loss(a: &ImageBuffer, b: &ImageBuffer, params: &CannyParams) -> Result<f64> {
    if !a.same_dims(b) {
        return Err(CoreError::contract("edge_loss", "images differ in size"));
    }
    let ea = canny(&luminance(a), params)?;
    let eb = canny(&luminance(b), params)?;
    let diff: f64 = ea.data.iter().zip(&eb.data).map(|(x, y)| (x - y).abs() as f64).sum();
    Ok(diff / ea.data.len() as f64)
}
