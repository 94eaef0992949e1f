//! Canny edge detection: Gaussian smoothing, Sobel gradients, non-maximum
//! suppression over four quantized directions, double thresholding relative to
//! the peak gradient, and hysteresis by 8-connected flood fill.

use std::collections::VecDeque;
use std::f64::consts::PI;

use crate::filter::{gaussian_blur, sobel};
use crate::{ImagingError, Plane, Result};

/// Magnitudes closer than this fraction of the peak are treated as equal, so
/// that ties from symmetric structures resolve the same way regardless of
/// summation order.
pub const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CannyParams {
    pub ksize: usize,
    pub sigma: f64,
    /// Weak threshold as a fraction of the peak gradient magnitude.
    pub low: f64,
    /// Strong threshold as a fraction of the peak gradient magnitude.
    pub high: f64,
}

impl Default for CannyParams {
    fn default() -> Self {
        CannyParams { ksize: 3, sigma: 0.3, low: 0.1, high: 0.2 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeMode {
    Binary,
    Soft,
}

/// Edge strength per pixel in `[0, 1]`; binary maps hold only 0 and 1.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeMap {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f32>,
    pub mode: EdgeMode,
}

impl EdgeMap {
    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&v| v > 0.0).count()
    }

    #[inline]
    pub fn is_edge(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x] > 0.0
    }

    pub fn edge_set(&self) -> Vec<(usize, usize)> {
        (0..self.height)
            .flat_map(|y| (0..self.width).map(move |x| (x, y)))
            .filter(|&(x, y)| self.is_edge(x, y))
            .collect()
    }
}

/// Neighbour offsets `(before, after)` along the quantized gradient direction.
fn direction_offsets(angle: f64) -> ((isize, isize), (isize, isize)) {
    let mut a = angle % PI;
    if a < 0.0 {
        a += PI;
    }
    let sector = PI / 8.0;
    if !(sector..7.0 * sector).contains(&a) {
        ((-1, 0), (1, 0))
    } else if a < 3.0 * sector {
        ((-1, -1), (1, 1))
    } else if a < 5.0 * sector {
        ((0, -1), (0, 1))
    } else {
        ((1, -1), (-1, 1))
    }
}

/// Thin ridges of the gradient magnitude. A pixel survives when it is strictly
/// above the neighbour behind it and not below the one ahead of it.
pub fn non_max_suppression(mag: &Plane, angle: &Plane) -> Plane {
    let (w, h) = (mag.width, mag.height);
    let tol = TIE_TOLERANCE * mag.max().max(0.0);
    let at = |x: isize, y: isize| {
        if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
            0.0
        } else {
            mag.get(x as usize, y as usize)
        }
    };
    let mut out = Plane::zeros(w, h);
    for y in 0..h {
        for x in 0..w {
            let m = mag.get(x, y);
            if m <= tol {
                continue;
            }
            let ((bx, by), (ax, ay)) = direction_offsets(angle.get(x, y));
            let (xi, yi) = (x as isize, y as isize);
            let before = at(xi + bx, yi + by);
            let after = at(xi + ax, yi + ay);
            if m > before + tol && m >= after - tol {
                out.set(x, y, m);
            }
        }
    }
    out
}

pub fn canny(plane: &Plane, params: &CannyParams) -> Result<EdgeMap> {
    if !(params.low > 0.0 && params.low < params.high && params.high <= 1.0) {
        return Err(ImagingError::contract(
            "canny",
            format!("thresholds must satisfy 0 < low < high <= 1, got low={} high={}", params.low, params.high),
        ));
    }
    let (w, h) = (plane.width, plane.height);
    let empty = EdgeMap { width: w, height: h, data: vec![0.0; w * h], mode: EdgeMode::Binary };
    let (lo, hi) = (plane.min(), plane.max());
    if hi - lo <= 0.0 {
        return Ok(empty);
    }
    // Contrast normalization makes the result independent of affine intensity
    // changes; thresholds are relative to the peak anyway.
    let normalized = plane.map(|v| (v - lo) / (hi - lo));
    let blurred = gaussian_blur(&normalized, params.ksize, params.sigma)?;
    let (mag, angle) = sobel(&blurred);
    let peak = mag.max();
    if peak <= 0.0 {
        return Ok(empty);
    }
    let thin = non_max_suppression(&mag, &angle);
    let strong = params.high * peak;
    let weak = params.low * peak;

    let mut edges = empty;
    let mut queue = VecDeque::new();
    for y in 0..h {
        for x in 0..w {
            if thin.get(x, y) >= strong {
                edges.data[y * w + x] = 1.0;
                queue.push_back((x, y));
            }
        }
    }
    while let Some((x, y)) = queue.pop_front() {
        for dy in -1isize..=1 {
            for dx in -1isize..=1 {
                let (nx, ny) = (x as isize + dx, y as isize + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let (nx, ny) = (nx as usize, ny as usize);
                if edges.data[ny * w + nx] == 0.0 && thin.get(nx, ny) >= weak {
                    edges.data[ny * w + nx] = 1.0;
                    queue.push_back((nx, ny));
                }
            }
        }
    }
    Ok(edges)
}
