use super::check_same;
use crate::filter::gaussian_kernel;
use crate::{ImagingError, Plane, Result};

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

/// Separable Gaussian window over valid positions only.
fn window_mean(p: &Plane, taps: &[f64]) -> Plane {
    let k = taps.len();
    let (ow, oh) = (p.width + 1 - k, p.height + 1 - k);
    let mut tmp = Plane::zeros(ow, p.height);
    for y in 0..p.height {
        for x in 0..ow {
            tmp.set(x, y, taps.iter().enumerate().map(|(t, w)| w * p.get(x + t, y)).sum());
        }
    }
    Plane::from_fn(ow, oh, |x, y| taps.iter().enumerate().map(|(t, w)| w * tmp.get(x, y + t)).sum())
}

/// Single-scale SSIM averaged over the valid region of the Gaussian window,
/// dynamic range 1.
pub fn ssim(a: &Plane, b: &Plane) -> Result<f64> {
    check_same("ssim", a, b)?;
    if a.width < SSIM_WINDOW || a.height < SSIM_WINDOW {
        return Err(ImagingError::contract(
            "ssim",
            format!("image {}x{} is smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} window", a.width, a.height),
        ));
    }
    let taps = gaussian_kernel(SSIM_WINDOW, SSIM_SIGMA)?;
    let c1 = SSIM_K1 * SSIM_K1;
    let c2 = SSIM_K2 * SSIM_K2;
    let prod = |p: &Plane, q: &Plane| Plane {
        width: p.width,
        height: p.height,
        data: p.data.iter().zip(&q.data).map(|(x, y)| x * y).collect(),
    };
    let mu_a = window_mean(a, &taps);
    let mu_b = window_mean(b, &taps);
    let e_aa = window_mean(&prod(a, a), &taps);
    let e_bb = window_mean(&prod(b, b), &taps);
    let e_ab = window_mean(&prod(a, b), &taps);
    let n = mu_a.data.len();
    let mut total = 0.0;
    for i in 0..n {
        let (ma, mb) = (mu_a.data[i], mu_b.data[i]);
        let va = e_aa.data[i] - ma * ma;
        let vb = e_bb.data[i] - mb * mb;
        let cov = e_ab.data[i] - ma * mb;
        total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    Ok(total / n as f64)
}
