//! Seeded procedural scenes: smooth backgrounds with overlapping textured
//! shapes, sharp and soft edges, and a little sensor noise. Used wherever a
//! corpus of natural-looking images is needed without external data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ImageBuffer;

enum Shape {
    Ellipse { cx: f64, cy: f64, rx: f64, ry: f64, rot: f64 },
    Rect { cx: f64, cy: f64, hw: f64, hh: f64, rot: f64 },
    Band { offset: f64, normal: f64, half: f64 },
}

struct Layer {
    shape: Shape,
    color: [f64; 3],
    softness: f64,
    texture: Option<(f64, f64, f64, f64)>,
}

impl Shape {
    /// Approximate signed distance, negative inside.
    fn distance(&self, x: f64, y: f64) -> f64 {
        match *self {
            Shape::Ellipse { cx, cy, rx, ry, rot } => {
                let (s, c) = rot.sin_cos();
                let (dx, dy) = (x - cx, y - cy);
                let (u, v) = (c * dx + s * dy, -s * dx + c * dy);
                let k = ((u / rx).powi(2) + (v / ry).powi(2)).sqrt();
                (k - 1.0) * rx.min(ry)
            }
            Shape::Rect { cx, cy, hw, hh, rot } => {
                let (s, c) = rot.sin_cos();
                let (dx, dy) = (x - cx, y - cy);
                let (u, v) = ((c * dx + s * dy).abs() - hw, (-s * dx + c * dy).abs() - hh);
                if u > 0.0 || v > 0.0 {
                    (u.max(0.0).powi(2) + v.max(0.0).powi(2)).sqrt()
                } else {
                    u.max(v)
                }
            }
            Shape::Band { offset, normal, half } => {
                let (s, c) = normal.sin_cos();
                (c * x + s * y - offset).abs() - half
            }
        }
    }
}

fn random_color(rng: &mut ChaCha8Rng) -> [f64; 3] {
    let base: f64 = rng.gen_range(0.1..0.9);
    [0, 1, 2].map(|_| (base + rng.gen_range(-0.25..0.25)).clamp(0.0, 1.0))
}

pub fn scene(width: usize, height: usize, seed: u64) -> ImageBuffer {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (width as f64, height as f64);
    let corners = [0; 4].map(|_| random_color(&mut rng));
    let n_layers = rng.gen_range(3..=7);
    let layers: Vec<Layer> = (0..n_layers)
        .map(|_| {
            let scale = w.min(h);
            let shape = match rng.gen_range(0..3) {
                0 => Shape::Ellipse {
                    cx: rng.gen_range(0.0..w),
                    cy: rng.gen_range(0.0..h),
                    rx: rng.gen_range(0.08..0.4) * scale,
                    ry: rng.gen_range(0.08..0.4) * scale,
                    rot: rng.gen_range(0.0..std::f64::consts::PI),
                },
                1 => Shape::Rect {
                    cx: rng.gen_range(0.0..w),
                    cy: rng.gen_range(0.0..h),
                    hw: rng.gen_range(0.05..0.35) * scale,
                    hh: rng.gen_range(0.05..0.35) * scale,
                    rot: rng.gen_range(0.0..std::f64::consts::PI),
                },
                _ => Shape::Band {
                    offset: rng.gen_range(0.0..w.max(h)),
                    normal: rng.gen_range(0.0..std::f64::consts::PI),
                    half: rng.gen_range(0.5..0.12 * scale + 1.0),
                },
            };
            let texture = rng.gen_bool(0.5).then(|| {
                (
                    rng.gen_range(0.2..1.6),
                    rng.gen_range(0.0..std::f64::consts::PI),
                    rng.gen_range(0.05..0.2),
                    rng.gen_range(0.0..std::f64::consts::TAU),
                )
            });
            Layer { shape, color: random_color(&mut rng), softness: rng.gen_range(0.3..2.0), texture }
        })
        .collect();
    let noise_sd: f64 = rng.gen_range(0.0..0.015);

    let mut img = ImageBuffer::from_fn(width, height, 3, |_, _, _| 0.0);
    for y in 0..height {
        for x in 0..width {
            let (fx, fy) = ((x as f64 + 0.5) / w, (y as f64 + 0.5) / h);
            let mut px = [0usize, 1, 2].map(|c| {
                let top = corners[0][c] * (1.0 - fx) + corners[1][c] * fx;
                let bottom = corners[2][c] * (1.0 - fx) + corners[3][c] * fx;
                top * (1.0 - fy) + bottom * fy
            });
            let (sx, sy) = (x as f64 + 0.5, y as f64 + 0.5);
            for layer in &layers {
                let d = layer.shape.distance(sx, sy);
                let cover = 1.0 / (1.0 + (d / layer.softness * 2.0).exp());
                if cover < 1e-4 {
                    continue;
                }
                let shade = layer.texture.map_or(0.0, |(freq, dir, amp, phase)| {
                    let (s, c) = dir.sin_cos();
                    amp * (freq * (c * sx + s * sy) + phase).sin()
                });
                for (p, col) in px.iter_mut().zip(layer.color) {
                    *p = *p * (1.0 - cover) + (col + shade) * cover;
                }
            }
            for (c, p) in px.iter().enumerate() {
                // Irwin-Hall approximation of a unit normal.
                let n: f64 = (0..4).map(|_| rng.gen::<f64>()).sum::<f64>() - 2.0;
                let v = p + noise_sd * n * 3f64.sqrt();
                img.set(x, y, c, v.clamp(0.0, 1.0) as f32);
            }
        }
    }
    img
}
