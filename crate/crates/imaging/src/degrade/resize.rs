use crate::{ImageBuffer, ImagingError, PixelRange, Result};

const A: f64 = -0.5;

/// Catmull-Rom cubic.
fn cubic(x: f64) -> f64 {
    let x = x.abs();
    if x < 1.0 {
        ((A + 2.0) * x - (A + 3.0)) * x * x + 1.0
    } else if x < 2.0 {
        (((x - 5.0) * x + 8.0) * x - 4.0) * A
    } else {
        0.0
    }
}

/// Per-output-sample source indices (edge clamped) and normalized weights.
/// When shrinking, the kernel is stretched by the scale factor so it also
/// acts as the anti-alias filter.
fn axis_weights(n_in: usize, n_out: usize) -> Vec<Vec<(usize, f64)>> {
    let scale = n_in as f64 / n_out as f64;
    let stretch = scale.max(1.0);
    let support = 2.0 * stretch;
    (0..n_out)
        .map(|i| {
            let center = (i as f64 + 0.5) * scale;
            let lo = (center - support).floor() as isize;
            let hi = (center + support).ceil() as isize;
            let mut taps: Vec<(usize, f64)> = (lo..=hi)
                .filter_map(|j| {
                    let w = cubic((j as f64 + 0.5 - center) / stretch);
                    (w != 0.0).then(|| (j.clamp(0, n_in as isize - 1) as usize, w))
                })
                .collect();
            let total: f64 = taps.iter().map(|t| t.1).sum();
            for t in &mut taps {
                t.1 /= total;
            }
            taps
        })
        .collect()
}

/// Separable bicubic resampling to `out_w x out_h`. Results are clamped to the
/// buffer's value range; equal sizes return an exact copy.
pub fn bicubic_resize(img: &ImageBuffer, out_w: usize, out_h: usize) -> Result<ImageBuffer> {
    if out_w == 0 || out_h == 0 {
        return Err(ImagingError::contract("bicubic_resize", format!("target {out_w}x{out_h} must be positive")));
    }
    let (w, h, c) = (img.width(), img.height(), img.channels());
    if (w, h) == (out_w, out_h) {
        return Ok(img.clone());
    }
    let (lo, hi) = match img.range() {
        PixelRange::Unit => (0.0, 1.0),
        PixelRange::Signed => (-1.0, 1.0),
    };
    let wx = axis_weights(w, out_w);
    let wy = axis_weights(h, out_h);
    let src = img.data();
    let mut tmp = vec![0.0f64; out_w * h * c];
    for y in 0..h {
        for (x, taps) in wx.iter().enumerate() {
            for ch in 0..c {
                tmp[(y * out_w + x) * c + ch] = taps.iter().map(|&(j, t)| t * src[(y * w + j) * c + ch] as f64).sum();
            }
        }
    }
    let mut data = Vec::with_capacity(out_w * out_h * c);
    for taps in &wy {
        for x in 0..out_w {
            for ch in 0..c {
                let v: f64 = taps.iter().map(|&(j, t)| t * tmp[(j * out_w + x) * c + ch]).sum();
                data.push(v.clamp(lo, hi) as f32);
            }
        }
    }
    ImageBuffer::new(out_w, out_h, c, img.range(), data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(w: usize, h: usize) -> ImageBuffer {
        ImageBuffer::from_fn(w, h, 3, |x, y, c| ((x * 3 + y * 5 + c) % 17) as f32 / 16.0)
    }

    #[test]
    fn cubic_interpolates_integers() {
        assert_eq!(cubic(0.0), 1.0);
        assert_eq!(cubic(1.0), 0.0);
        assert_eq!(cubic(2.0), 0.0);
        let sum: f64 = (-2..=2).map(|k| cubic(k as f64 + 0.3)).sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_resize_is_exact() {
        let img = ramp(13, 9);
        assert_eq!(bicubic_resize(&img, 13, 9).unwrap(), img);
    }

    #[test]
    fn shape_law_for_scale_four() {
        let img = ramp(96, 96);
        let out = bicubic_resize(&img, 24, 24).unwrap();
        assert_eq!((out.width(), out.height(), out.channels()), (24, 24, 3));
    }

    #[test]
    fn constant_stays_constant() {
        let img = ImageBuffer::filled(17, 11, &[0.25, 0.5, 0.75]);
        for (w, h) in [(5, 4), (40, 23), (17, 22)] {
            let out = bicubic_resize(&img, w, h).unwrap();
            for px in out.data().chunks(3) {
                for (v, want) in px.iter().zip([0.25, 0.5, 0.75]) {
                    assert!((v - want).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn zero_target_is_rejected() {
        assert!(bicubic_resize(&ramp(4, 4), 0, 4).is_err());
    }
}
