//! Full-range ITU-R BT.601 YCbCr with chroma centred on 0.5.

use crate::{ImageBuffer, ImagingError, Plane, Result};

pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

#[inline]
pub fn rgb_to_ycbcr_pixel([r, g, b]: [f64; 3]) -> [f64; 3] {
    let y = LUMA_WEIGHTS[0] * r + LUMA_WEIGHTS[1] * g + LUMA_WEIGHTS[2] * b;
    let cb = 0.5 - 0.168_735_891_647_856 * r - 0.331_264_108_352_144 * g + 0.5 * b;
    let cr = 0.5 + 0.5 * r - 0.418_687_589_158_345 * g - 0.081_312_410_841_655 * b;
    [y, cb, cr]
}

#[inline]
pub fn ycbcr_to_rgb_pixel([y, cb, cr]: [f64; 3]) -> [f64; 3] {
    let (cb, cr) = (cb - 0.5, cr - 0.5);
    let r = y + 1.402 * cr;
    let g = y - 0.344_136_286_201_022 * cb - 0.714_136_286_201_022 * cr;
    let b = y + 1.772 * cb;
    [r, g, b]
}

fn convert(img: &ImageBuffer, op: &'static str, f: fn([f64; 3]) -> [f64; 3]) -> Result<ImageBuffer> {
    if img.channels() != 3 {
        return Err(ImagingError::dim(op, format!("expected 3 channels, got {}", img.channels())));
    }
    let mut data = Vec::with_capacity(img.data().len());
    for px in img.data().chunks_exact(3) {
        let out = f([px[0] as f64, px[1] as f64, px[2] as f64]);
        data.extend(out.iter().map(|&v| v as f32));
    }
    ImageBuffer::new(img.width(), img.height(), 3, img.range(), data)
}

pub fn rgb_to_ycbcr(img: &ImageBuffer) -> Result<ImageBuffer> {
    convert(img, "rgb_to_ycbcr", rgb_to_ycbcr_pixel)
}

pub fn ycbcr_to_rgb(img: &ImageBuffer) -> Result<ImageBuffer> {
    convert(img, "ycbcr_to_rgb", ycbcr_to_rgb_pixel)
}

/// Y plane of an RGB image; single-channel inputs are returned as-is.
pub fn luminance(img: &ImageBuffer) -> Plane {
    if img.channels() == 1 {
        return img.plane(0);
    }
    let data = img
        .data()
        .chunks_exact(img.channels())
        .map(|px| LUMA_WEIGHTS[0] * px[0] as f64 + LUMA_WEIGHTS[1] * px[1] as f64 + LUMA_WEIGHTS[2] * px[2] as f64)
        .collect();
    Plane { width: img.width(), height: img.height(), data }
}
