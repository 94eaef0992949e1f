//! Baseline JPEG round trip without entropy coding: 8-bit quantization, JFIF
//! YCbCr, 4:2:0 chroma averaging, 8x8 DCT, table quantization and the inverse
//! path. Only IEEE basic arithmetic is used, so results are bit-identical
//! across platforms.

use crate::{ImageBuffer, ImagingError, PixelRange, Result};

pub const LUMA_TABLE: [u16; 64] = [
    16, 11, 10, 16, 24, 40, 51, 61, //
    12, 12, 14, 19, 26, 58, 60, 55, //
    14, 13, 16, 24, 40, 57, 69, 56, //
    14, 17, 22, 29, 51, 87, 80, 62, //
    18, 22, 37, 56, 68, 109, 103, 77, //
    24, 35, 55, 64, 81, 104, 113, 92, //
    49, 64, 78, 87, 103, 121, 120, 101, //
    72, 92, 95, 98, 112, 100, 103, 99,
];

pub const CHROMA_TABLE: [u16; 64] = [
    17, 18, 24, 47, 99, 99, 99, 99, //
    18, 21, 26, 66, 99, 99, 99, 99, //
    24, 26, 56, 99, 99, 99, 99, 99, //
    47, 66, 99, 99, 99, 99, 99, 99, //
    99, 99, 99, 99, 99, 99, 99, 99, //
    99, 99, 99, 99, 99, 99, 99, 99, //
    99, 99, 99, 99, 99, 99, 99, 99, //
    99, 99, 99, 99, 99, 99, 99, 99,
];

/// `cos(k * pi / 16)` for `k = 0..=8`, written out so the basis does not depend
/// on the platform's `cos`.
const COS16: [f64; 9] = [
    1.0,
    0.980_785_280_403_230_4,
    0.923_879_532_511_286_7,
    0.831_469_612_302_545_2,
    0.707_106_781_186_547_5,
    0.555_570_233_019_602_2,
    0.382_683_432_365_089_8,
    0.195_090_322_016_128_3,
    0.0,
];

fn cos16(k: usize) -> f64 {
    let k = k % 32;
    let k = if k > 16 { 32 - k } else { k };
    if k > 8 {
        -COS16[16 - k]
    } else {
        COS16[k]
    }
}

/// Orthonormal DCT-II basis, `basis[u][x]`.
fn dct_basis() -> [[f64; 8]; 8] {
    let mut b = [[0.0; 8]; 8];
    for (u, row) in b.iter_mut().enumerate() {
        let cu = if u == 0 { COS16[4] } else { 1.0 };
        for (x, v) in row.iter_mut().enumerate() {
            *v = 0.5 * cu * cos16((2 * x + 1) * u);
        }
    }
    b
}

/// Quality-scaled quantization table.
pub fn scaled_table(base: &[u16; 64], quality: u8) -> Result<[f64; 64]> {
    if !(1..=100).contains(&quality) {
        return Err(ImagingError::contract("jpeg", format!("quality must be in 1..=100, got {quality}")));
    }
    let q = quality as u32;
    let scale = if q < 50 { 5000 / q } else { 200 - 2 * q };
    let mut out = [0.0; 64];
    for (o, &t) in out.iter_mut().zip(base) {
        *o = ((t as u32 * scale + 50) / 100).clamp(1, 255) as f64;
    }
    Ok(out)
}

struct Channel {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Channel {
    fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }
}

fn code_blocks(ch: &mut Channel, table: &[f64; 64], basis: &[[f64; 8]; 8]) {
    let mut block = [[0.0f64; 8]; 8];
    let mut tmp = [[0.0f64; 8]; 8];
    for by in (0..ch.height).step_by(8) {
        for bx in (0..ch.width).step_by(8) {
            for (y, row) in block.iter_mut().enumerate() {
                for (x, v) in row.iter_mut().enumerate() {
                    *v = ch.get(bx + x, by + y) - 128.0;
                }
            }
            // forward: F = B f B^T
            for u in 0..8 {
                for x in 0..8 {
                    tmp[u][x] = (0..8).map(|y| basis[u][y] * block[y][x]).sum();
                }
            }
            for u in 0..8 {
                for v in 0..8 {
                    let f: f64 = (0..8).map(|x| tmp[u][x] * basis[v][x]).sum();
                    let q = table[u * 8 + v];
                    block[u][v] = (f / q).round() * q;
                }
            }
            // inverse: f = B^T F B
            for y in 0..8 {
                for v in 0..8 {
                    tmp[y][v] = (0..8).map(|u| basis[u][y] * block[u][v]).sum();
                }
            }
            for y in 0..8 {
                for x in 0..8 {
                    let f: f64 = (0..8).map(|v| tmp[y][v] * basis[v][x]).sum();
                    ch.data[(by + y) * ch.width + bx + x] = f + 128.0;
                }
            }
        }
    }
}

fn to_level(v: f32) -> f64 {
    (v.clamp(0.0, 1.0) as f64 * 255.0).round()
}

/// Compress and decompress `img` at `quality`. Accepts 1- or 3-channel images
/// in `[0, 1]`; output samples lie on the 8-bit grid.
pub fn jpeg_degrade(img: &ImageBuffer, quality: u8) -> Result<ImageBuffer> {
    let luma_q = scaled_table(&LUMA_TABLE, quality)?;
    let chroma_q = scaled_table(&CHROMA_TABLE, quality)?;
    if img.range() != PixelRange::Unit {
        return Err(ImagingError::contract("jpeg", "input must be in the [0, 1] range"));
    }
    let c = img.channels();
    if c != 1 && c != 3 {
        return Err(ImagingError::dim("jpeg", format!("expected 1 or 3 channels, got {c}")));
    }
    let basis = dct_basis();
    let (w, h) = (img.width(), img.height());
    let mcu = if c == 3 { 16 } else { 8 };
    let (pw, ph) = (w.div_ceil(mcu) * mcu, h.div_ceil(mcu) * mcu);
    let px = |x: usize, y: usize, ch: usize| to_level(img.get(x.min(w - 1), y.min(h - 1), ch));

    if c == 1 {
        let mut y_ch = Channel { width: pw, height: ph, data: Vec::with_capacity(pw * ph) };
        for y in 0..ph {
            for x in 0..pw {
                y_ch.data.push(px(x, y, 0));
            }
        }
        code_blocks(&mut y_ch, &luma_q, &basis);
        let data = (0..h)
            .flat_map(|y| (0..w).map(move |x| (y, x)))
            .map(|(y, x)| (y_ch.get(x, y).round().clamp(0.0, 255.0) / 255.0) as f32)
            .collect();
        return ImageBuffer::new(w, h, 1, PixelRange::Unit, data);
    }

    let mut y_ch = Channel { width: pw, height: ph, data: vec![0.0; pw * ph] };
    let mut cb_full = vec![0.0; pw * ph];
    let mut cr_full = vec![0.0; pw * ph];
    for y in 0..ph {
        for x in 0..pw {
            let (r, g, b) = (px(x, y, 0), px(x, y, 1), px(x, y, 2));
            let i = y * pw + x;
            y_ch.data[i] = 0.299 * r + 0.587 * g + 0.114 * b;
            cb_full[i] = 128.0 - 0.168_735_891_647_856 * r - 0.331_264_108_352_144 * g + 0.5 * b;
            cr_full[i] = 128.0 + 0.5 * r - 0.418_687_589_158_345 * g - 0.081_312_410_841_655 * b;
        }
    }
    let (cw, chh) = (pw / 2, ph / 2);
    let subsample = |full: &[f64]| Channel {
        width: cw,
        height: chh,
        data: (0..chh)
            .flat_map(|y| (0..cw).map(move |x| (x, y)))
            .map(|(x, y)| {
                let i = 2 * y * pw + 2 * x;
                (full[i] + full[i + 1] + full[i + pw] + full[i + pw + 1]) / 4.0
            })
            .collect(),
    };
    let mut cb = subsample(&cb_full);
    let mut cr = subsample(&cr_full);
    code_blocks(&mut y_ch, &luma_q, &basis);
    code_blocks(&mut cb, &chroma_q, &basis);
    code_blocks(&mut cr, &chroma_q, &basis);

    let mut data = Vec::with_capacity(w * h * 3);
    for y in 0..h {
        for x in 0..w {
            let yy = y_ch.get(x, y);
            let b = cb.get(x / 2, y / 2) - 128.0;
            let r = cr.get(x / 2, y / 2) - 128.0;
            let rgb = [
                yy + 1.402 * r,
                yy - 0.344_136_286_201_022 * b - 0.714_136_286_201_022 * r,
                yy + 1.772 * b,
            ];
            data.extend(rgb.iter().map(|v| (v.round().clamp(0.0, 255.0) / 255.0) as f32));
        }
    }
    ImageBuffer::new(w, h, 3, PixelRange::Unit, data)
}
