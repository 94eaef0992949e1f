//! Separable Gaussian smoothing and Sobel gradients on [`Plane`]s with
//! mirror (reflect-101) borders.

use crate::{ImagingError, Plane, Result};

/// Mirror index without repeating the border sample: `-1 -> 1`, `n -> n - 2`.
#[inline]
pub fn reflect101(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let n = n as isize;
    let period = 2 * (n - 1);
    let mut i = i.rem_euclid(period);
    if i >= n {
        i = period - i;
    }
    i as usize
}

/// Normalized 1-D Gaussian taps; the 2-D kernel is their outer product.
pub fn gaussian_kernel(ksize: usize, sigma: f64) -> Result<Vec<f64>> {
    if ksize % 2 == 0 {
        return Err(ImagingError::contract("gaussian_kernel", format!("kernel size must be odd, got {ksize}")));
    }
    if !(sigma > 0.0) {
        return Err(ImagingError::contract("gaussian_kernel", format!("sigma must be positive, got {sigma}")));
    }
    let r = (ksize / 2) as f64;
    let taps: Vec<f64> = (0..ksize)
        .map(|i| {
            let d = i as f64 - r;
            (-d * d / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let total: f64 = taps.iter().sum();
    Ok(taps.into_iter().map(|t| t / total).collect())
}

/// Horizontal then vertical pass of a symmetric 1-D kernel.
pub fn separable(plane: &Plane, taps: &[f64]) -> Plane {
    let r = (taps.len() / 2) as isize;
    let (w, h) = (plane.width, plane.height);
    let mut tmp = Plane::zeros(w, h);
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, &t) in taps.iter().enumerate() {
                acc += t * plane.get(reflect101(x as isize + k as isize - r, w), y);
            }
            tmp.set(x, y, acc);
        }
    }
    let mut out = Plane::zeros(w, h);
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, &t) in taps.iter().enumerate() {
                acc += t * tmp.get(x, reflect101(y as isize + k as isize - r, h));
            }
            out.set(x, y, acc);
        }
    }
    out
}

pub fn gaussian_blur(plane: &Plane, ksize: usize, sigma: f64) -> Result<Plane> {
    Ok(separable(plane, &gaussian_kernel(ksize, sigma)?))
}

/// Separable true convolution with zero padding, cropped to the input size.
/// `offset` selects where the crop starts inside the full convolution, so
/// `out[i] = sum_t taps[t] * x[i + offset - t]` along each axis.
pub fn convolve_zero(plane: &Plane, taps_y: &[f64], taps_x: &[f64], offset_y: usize, offset_x: usize) -> Plane {
    let (w, h) = (plane.width, plane.height);
    let mut tmp = Plane::zeros(w, h);
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (t, &k) in taps_x.iter().enumerate() {
                let sx = x as isize + offset_x as isize - t as isize;
                if sx >= 0 && (sx as usize) < w {
                    acc += k * plane.get(sx as usize, y);
                }
            }
            tmp.set(x, y, acc);
        }
    }
    let mut out = Plane::zeros(w, h);
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (t, &k) in taps_y.iter().enumerate() {
                let sy = y as isize + offset_y as isize - t as isize;
                if sy >= 0 && (sy as usize) < h {
                    acc += k * tmp.get(x, sy as usize);
                }
            }
            out.set(x, y, acc);
        }
    }
    out
}

/// Keep every second sample in both directions, starting at the origin.
pub fn decimate2(plane: &Plane) -> Plane {
    let (w, h) = (plane.width.div_ceil(2), plane.height.div_ceil(2));
    Plane::from_fn(w, h, |x, y| plane.get(2 * x, 2 * y))
}

pub const SOBEL_X: [[f64; 3]; 3] = [[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]];
pub const SOBEL_Y: [[f64; 3]; 3] = [[-1.0, -2.0, -1.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0]];

/// Gradient magnitude `sqrt(gx^2 + gy^2)` and direction `atan2(gy, gx)` in
/// radians from 3x3 Sobel responses (cross-correlation, mirror borders).
pub fn sobel(plane: &Plane) -> (Plane, Plane) {
    let (w, h) = (plane.width, plane.height);
    let mut mag = Plane::zeros(w, h);
    let mut ang = Plane::zeros(w, h);
    for y in 0..h {
        for x in 0..w {
            let (mut gx, mut gy) = (0.0, 0.0);
            for (dy, (rx, ry)) in SOBEL_X.iter().zip(&SOBEL_Y).enumerate() {
                let sy = reflect101(y as isize + dy as isize - 1, h);
                for dx in 0..3 {
                    let v = plane.get(reflect101(x as isize + dx as isize - 1, w), sy);
                    gx += rx[dx] * v;
                    gy += ry[dx] * v;
                }
            }
            mag.set(x, y, (gx * gx + gy * gy).sqrt());
            ang.set(x, y, gy.atan2(gx));
        }
    }
    (mag, ang)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reflect101_mirrors() {
        let idx: Vec<usize> = (-3..8).map(|i| reflect101(i, 5)).collect();
        assert_eq!(idx, vec![3, 2, 1, 0, 1, 2, 3, 4, 3, 2, 1]);
    }

    #[test]
    fn even_kernel_rejected() {
        assert!(gaussian_kernel(4, 1.0).is_err());
    }

    #[test]
    fn constant_image_unchanged() {
        let p = Plane::from_fn(6, 5, |_, _| 0.37);
        let b = gaussian_blur(&p, 3, 0.3).unwrap();
        assert!(b.data.iter().all(|v| (v - 0.37).abs() < 1e-15));
    }

    #[test]
    fn impulse_reproduces_kernel() {
        let mut p = Plane::zeros(7, 7);
        p.set(3, 3, 1.0);
        let k = gaussian_kernel(3, 0.3).unwrap();
        let b = gaussian_blur(&p, 3, 0.3).unwrap();
        for dy in 0..3 {
            for dx in 0..3 {
                assert!((b.get(2 + dx, 2 + dy) - k[dx] * k[dy]).abs() < 1e-15);
            }
        }
        let total: f64 = b.data.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_image_has_no_gradient() {
        let (mag, _) = sobel(&Plane::from_fn(5, 5, |_, _| 0.8));
        assert!(mag.data.iter().all(|&m| m.abs() < 1e-12));
    }

    #[test]
    fn vertical_step_gradient_is_horizontal() {
        let p = Plane::from_fn(8, 6, |x, _| if x >= 4 { 1.0 } else { 0.0 });
        let (mag, ang) = sobel(&p);
        let row: Vec<f64> = (0..8).map(|x| mag.get(x, 2)).collect();
        let peak = row.iter().copied().fold(0.0, f64::max);
        assert_eq!(peak, 4.0);
        assert_eq!(row[3], peak);
        assert_eq!(row[4], peak);
        assert_eq!(ang.get(3, 2), 0.0);
    }
}
