use super::check_same;
use crate::filter::{convolve_zero, decimate2};
use crate::{ImagingError, Plane, Result};

/// Stability constant 170 on the 8-bit scale, expressed for `[0, 1]` data.
pub const GMSD_C: f64 = 170.0 / (255.0 * 255.0);

fn gradient_magnitude(p: &Plane) -> Plane {
    let third = [1.0 / 3.0; 3];
    let diff = [1.0, 0.0, -1.0];
    let gx = convolve_zero(p, &third, &diff, 1, 1);
    let gy = convolve_zero(p, &diff, &third, 1, 1);
    Plane {
        width: p.width,
        height: p.height,
        data: gx.data.iter().zip(&gy.data).map(|(x, y)| (x * x + y * y).sqrt()).collect(),
    }
}

/// Gradient magnitude similarity deviation: 2x2 mean and decimation, Prewitt
/// magnitudes with zero borders, then the sample standard deviation of the
/// similarity map. Lower is better.
pub fn gmsd(a: &Plane, b: &Plane) -> Result<f64> {
    check_same("gmsd", a, b)?;
    if a.width < 4 || a.height < 4 {
        return Err(ImagingError::contract("gmsd", format!("image {}x{} is smaller than 4x4", a.width, a.height)));
    }
    let half = [0.5, 0.5];
    let da = decimate2(&convolve_zero(a, &half, &half, 1, 1));
    let db = decimate2(&convolve_zero(b, &half, &half, 1, 1));
    let (ma, mb) = (gradient_magnitude(&da), gradient_magnitude(&db));
    let gms: Vec<f64> = ma
        .data
        .iter()
        .zip(&mb.data)
        .map(|(x, y)| (2.0 * x * y + GMSD_C) / (x * x + y * y + GMSD_C))
        .collect();
    let n = gms.len() as f64;
    let mean = gms.iter().sum::<f64>() / n;
    let var = gms.iter().map(|g| (g - mean) * (g - mean)).sum::<f64>() / (n - 1.0);
    Ok(var.sqrt())
}
