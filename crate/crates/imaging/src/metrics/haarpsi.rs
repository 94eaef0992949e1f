use super::check_same;
use crate::filter::{convolve_zero, decimate2};
use crate::{ImagingError, Plane, Result};

/// Similarity stabilizer for coefficients of 8-bit scaled images.
pub const HAARPSI_C: f64 = 30.0;
pub const HAARPSI_ALPHA: f64 = 4.2;
const SCALES: usize = 3;

/// Haar coefficients per scale for the two orientations: `[scale][orientation]`.
fn haar_decompose(p: &Plane) -> Vec<[Plane; 2]> {
    (1..=SCALES)
        .map(|s| {
            let k = 1usize << s;
            let amp = 0.5f64.powi(s as i32);
            let signed: Vec<f64> = (0..k).map(|i| if i < k / 2 { -amp } else { amp }).collect();
            let ones = vec![1.0; k];
            let off = (k - 1) / 2;
            [convolve_zero(p, &signed, &ones, off, off), convolve_zero(p, &ones, &signed, off, off)]
        })
        .collect()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-HAARPSI_ALPHA * x).exp())
}

fn logit(x: f64) -> f64 {
    (x / (1.0 - x)).ln() / HAARPSI_ALPHA
}

/// Haar-wavelet perceptual similarity on a single channel. Values are scaled
/// to 0..255, smoothed and decimated by two, then compared on the two finest
/// Haar scales with weights from the coarsest one.
pub fn haarpsi(a: &Plane, b: &Plane) -> Result<f64> {
    check_same("haarpsi", a, b)?;
    if a.width < 8 || a.height < 8 {
        return Err(ImagingError::contract("haarpsi", format!("image {}x{} is smaller than 8x8", a.width, a.height)));
    }
    if a.data == b.data {
        return Ok(1.0);
    }
    let half = [0.5, 0.5];
    let prep = |p: &Plane| decimate2(&convolve_zero(&p.map(|v| v * 255.0), &half, &half, 0, 0));
    let ca = haar_decompose(&prep(a));
    let cb = haar_decompose(&prep(b));
    let n = ca[0][0].data.len();
    let (mut num, mut den) = (0.0, 0.0);
    for o in 0..2 {
        for i in 0..n {
            let w = ca[SCALES - 1][o].data[i].abs().max(cb[SCALES - 1][o].data[i].abs());
            let mut ls = 0.0;
            for s in 0..2 {
                let (x, y) = (ca[s][o].data[i].abs(), cb[s][o].data[i].abs());
                ls += (2.0 * x * y + HAARPSI_C) / (x * x + y * y + HAARPSI_C);
            }
            num += sigmoid(ls / 2.0) * w;
            den += w;
        }
    }
    if den == 0.0 {
        return Ok(1.0);
    }
    Ok(logit(num / den).powi(2))
}
