//! Scalar reference implementations written straight from the definitions,
//! with no shared code from the library. Direct 2-D loops throughout.
#![allow(dead_code)]

use std::f64::consts::PI;

#[derive(Clone, Debug)]
pub struct Img {
    pub w: usize,
    pub h: usize,
    pub v: Vec<f64>,
}

impl Img {
    pub fn new(w: usize, h: usize, v: Vec<f64>) -> Img {
        assert_eq!(v.len(), w * h);
        Img { w, h, v }
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.v[y * self.w + x]
    }

    fn zero_pad(&self, x: isize, y: isize) -> f64 {
        if x < 0 || y < 0 || x >= self.w as isize || y >= self.h as isize {
            0.0
        } else {
            self.get(x as usize, y as usize)
        }
    }

    fn mirror(&self, x: isize, y: isize) -> f64 {
        fn fold(mut i: isize, n: isize) -> usize {
            if n == 1 {
                return 0;
            }
            loop {
                if i < 0 {
                    i = -i;
                } else if i >= n {
                    i = 2 * (n - 1) - i;
                } else {
                    return i as usize;
                }
            }
        }
        self.get(fold(x, self.w as isize), fold(y, self.h as isize))
    }

    fn scaled(&self, k: f64) -> Img {
        Img::new(self.w, self.h, self.v.iter().map(|v| v * k).collect())
    }
}

/// Full 2-D convolution cropped to the input size starting at `(oy, ox)` in
/// the full result; samples outside the image are zero.
fn conv_same(img: &Img, kernel: &[Vec<f64>], oy: usize, ox: usize) -> Img {
    let (kh, kw) = (kernel.len(), kernel[0].len());
    let mut out = vec![0.0; img.w * img.h];
    for y in 0..img.h {
        for x in 0..img.w {
            let mut acc = 0.0;
            for i in 0..kh {
                for j in 0..kw {
                    let sy = y as isize + oy as isize - i as isize;
                    let sx = x as isize + ox as isize - j as isize;
                    acc += kernel[i][j] * img.zero_pad(sx, sy);
                }
            }
            out[y * img.w + x] = acc;
        }
    }
    Img::new(img.w, img.h, out)
}

fn every_other(img: &Img) -> Img {
    let (w, h) = (img.w.div_ceil(2), img.h.div_ceil(2));
    let mut v = Vec::new();
    for y in 0..h {
        for x in 0..w {
            v.push(img.get(2 * x, 2 * y));
        }
    }
    Img::new(w, h, v)
}

pub fn psnr(a: &Img, b: &Img) -> f64 {
    let mut se = 0.0;
    for i in 0..a.v.len() {
        se += (a.v[i] - b.v[i]).powi(2);
    }
    let mse = se / a.v.len() as f64;
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (1.0 / mse).log10()
    }
}

pub fn gaussian_2d(size: usize, sigma: f64) -> Vec<Vec<f64>> {
    let r = (size / 2) as f64;
    let mut k = vec![vec![0.0; size]; size];
    let mut total = 0.0;
    for (i, row) in k.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            let (di, dj) = (i as f64 - r, j as f64 - r);
            *v = (-(di * di + dj * dj) / (2.0 * sigma * sigma)).exp();
            total += *v;
        }
    }
    for row in &mut k {
        for v in row.iter_mut() {
            *v /= total;
        }
    }
    k
}

pub fn ssim(a: &Img, b: &Img) -> f64 {
    let win = gaussian_2d(11, 1.5);
    let (c1, c2) = (0.01f64.powi(2), 0.03f64.powi(2));
    let mut total = 0.0;
    let mut count = 0;
    for y0 in 0..=a.h - 11 {
        for x0 in 0..=a.w - 11 {
            let (mut ma, mut mb) = (0.0, 0.0);
            for i in 0..11 {
                for j in 0..11 {
                    ma += win[i][j] * a.get(x0 + j, y0 + i);
                    mb += win[i][j] * b.get(x0 + j, y0 + i);
                }
            }
            let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
            for i in 0..11 {
                for j in 0..11 {
                    let (da, db) = (a.get(x0 + j, y0 + i) - ma, b.get(x0 + j, y0 + i) - mb);
                    va += win[i][j] * da * da;
                    vb += win[i][j] * db * db;
                    cov += win[i][j] * da * db;
                }
            }
            total += (2.0 * ma * mb + c1) * (2.0 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            count += 1;
        }
    }
    total / count as f64
}

/// Computed on the 8-bit scale with the published constant 170.
pub fn gmsd(a: &Img, b: &Img) -> f64 {
    let avg = vec![vec![0.25; 2]; 2];
    let prewitt_x = vec![vec![1.0 / 3.0, 0.0, -1.0 / 3.0]; 3];
    let prewitt_y = vec![vec![1.0 / 3.0; 3], vec![0.0; 3], vec![-1.0 / 3.0; 3]];
    let grad = |img: &Img| {
        let d = every_other(&conv_same(&img.scaled(255.0), &avg, 1, 1));
        let gx = conv_same(&d, &prewitt_x, 1, 1);
        let gy = conv_same(&d, &prewitt_y, 1, 1);
        gx.v.iter().zip(&gy.v).map(|(x, y)| (x * x + y * y).sqrt()).collect::<Vec<f64>>()
    };
    let (ga, gb) = (grad(a), grad(b));
    let gms: Vec<f64> = ga.iter().zip(&gb).map(|(x, y)| (2.0 * x * y + 170.0) / (x * x + y * y + 170.0)).collect();
    let n = gms.len() as f64;
    let mean = gms.iter().sum::<f64>() / n;
    (gms.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

pub fn haarpsi(a: &Img, b: &Img) -> f64 {
    let (c, alpha) = (30.0, 4.2);
    let avg = vec![vec![0.25; 2]; 2];
    let prep = |img: &Img| every_other(&conv_same(&img.scaled(255.0), &avg, 0, 0));
    let coeffs = |img: &Img| {
        let mut out = Vec::new();
        for s in 1..=3 {
            let k = 1usize << s;
            let amp = 2f64.powi(-(s as i32));
            let horiz: Vec<Vec<f64>> =
                (0..k).map(|i| vec![if i < k / 2 { -amp } else { amp }; k]).collect();
            let vert: Vec<Vec<f64>> = (0..k).map(|i| (0..k).map(|j| horiz[j][i]).collect()).collect();
            let off = (k - 1) / 2;
            out.push([conv_same(img, &horiz, off, off), conv_same(img, &vert, off, off)]);
        }
        out
    };
    let (ca, cb) = (coeffs(&prep(a)), coeffs(&prep(b)));
    let sigmoid = |x: f64| 1.0 / (1.0 + (-alpha * x).exp());
    let (mut num, mut den) = (0.0, 0.0);
    for o in 0..2 {
        for i in 0..ca[0][0].v.len() {
            let w = ca[2][o].v[i].abs().max(cb[2][o].v[i].abs());
            let mut ls = 0.0;
            for s in 0..2 {
                let (x, y) = (ca[s][o].v[i].abs(), cb[s][o].v[i].abs());
                ls += (2.0 * x * y + c) / (x * x + y * y + c) / 2.0;
            }
            num += sigmoid(ls) * w;
            den += w;
        }
    }
    let m = num / den;
    ((m / (1.0 - m)).ln() / alpha).powi(2)
}

pub fn blur_mirror(img: &Img, size: usize, sigma: f64) -> Img {
    let k = gaussian_2d(size, sigma);
    let r = (size / 2) as isize;
    let mut v = vec![0.0; img.w * img.h];
    for y in 0..img.h {
        for x in 0..img.w {
            let mut acc = 0.0;
            for i in 0..size {
                for j in 0..size {
                    acc += k[i][j] * img.mirror(x as isize + j as isize - r, y as isize + i as isize - r);
                }
            }
            v[y * img.w + x] = acc;
        }
    }
    Img::new(img.w, img.h, v)
}

/// Sobel responses as cross-correlation with mirrored borders.
pub fn sobel_xy(img: &Img) -> (Img, Img) {
    let kx = [[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]];
    let ky = [[-1.0, -2.0, -1.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0]];
    let mut gx = vec![0.0; img.w * img.h];
    let mut gy = vec![0.0; img.w * img.h];
    for y in 0..img.h {
        for x in 0..img.w {
            for i in 0..3 {
                for j in 0..3 {
                    let v = img.mirror(x as isize + j as isize - 1, y as isize + i as isize - 1);
                    gx[y * img.w + x] += kx[i][j] * v;
                    gy[y * img.w + x] += ky[i][j] * v;
                }
            }
        }
    }
    (Img::new(img.w, img.h, gx), Img::new(img.w, img.h, gy))
}

/// Binary Canny map. Direction sectors come from slope comparisons instead
/// of angles; hysteresis by repeated relaxation instead of a queue.
pub fn canny(img: &Img, sigma: f64, low: f64, high: f64, tie: f64) -> Vec<bool> {
    let (w, h) = (img.w, img.h);
    let lo = img.v.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = img.v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi == lo {
        return vec![false; w * h];
    }
    let norm = Img::new(w, h, img.v.iter().map(|v| (v - lo) / (hi - lo)).collect());
    let (gx, gy) = sobel_xy(&blur_mirror(&norm, 3, sigma));
    let mag: Vec<f64> = gx.v.iter().zip(&gy.v).map(|(a, b)| (a * a + b * b).sqrt()).collect();
    let peak = mag.iter().cloned().fold(0.0, f64::max);
    if peak == 0.0 {
        return vec![false; w * h];
    }
    let tol = tie * peak;
    let m_at = |x: isize, y: isize| {
        if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
            0.0
        } else {
            mag[y as usize * w + x as usize]
        }
    };
    let t = (PI / 8.0).tan();
    let mut thin = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let m = mag[i];
            if m <= tol {
                continue;
            }
            let (ax, ay) = (gx.v[i].abs(), gy.v[i].abs());
            let (dx, dy): (isize, isize) = if ay < t * ax {
                (1, 0)
            } else if ax < t * ay {
                (0, 1)
            } else if gx.v[i] * gy.v[i] > 0.0 {
                (1, 1)
            } else {
                (-1, 1)
            };
            let (xi, yi) = (x as isize, y as isize);
            let before = m_at(xi - dx, yi - dy);
            let after = m_at(xi + dx, yi + dy);
            if m > before + tol && m >= after - tol {
                thin[i] = m;
            }
        }
    }
    let mut edge: Vec<bool> = thin.iter().map(|&m| m >= high * peak).collect();
    loop {
        let mut changed = false;
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                if edge[i] || thin[i] < low * peak {
                    continue;
                }
                let linked = (-1isize..=1).any(|dy| {
                    (-1isize..=1).any(|dx| {
                        let (nx, ny) = (x as isize + dx, y as isize + dy);
                        nx >= 0 && ny >= 0 && nx < w as isize && ny < h as isize && edge[ny as usize * w + nx as usize]
                    })
                });
                if linked {
                    edge[i] = true;
                    changed = true;
                }
            }
        }
        if !changed {
            return edge;
        }
    }
}
