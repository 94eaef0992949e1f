//! PNG/JPEG decoding into `[0, 1]` buffers and lossless 8-bit PNG output.

use std::path::Path;

use image::{DynamicImage, RgbImage};

use crate::{ImageBuffer, ImagingError, PixelRange, Result};

pub fn read_image(path: &Path) -> Result<ImageBuffer> {
    let img = image::open(path).map_err(|source| ImagingError::Read { path: path.to_path_buf(), source })?;
    Ok(from_dynamic(&img))
}

pub fn from_dynamic(img: &DynamicImage) -> ImageBuffer {
    let rgb = img.to_rgb8();
    let (w, h) = rgb.dimensions();
    let data = rgb.as_raw().iter().map(|&v| v as f32 / 255.0).collect();
    ImageBuffer::new(w as usize, h as usize, 3, PixelRange::Unit, data).expect("decoded image is non-empty")
}

/// Quantizes to 8 bits (round half up after clamping to `[0, 1]`).
pub fn to_rgb8(img: &ImageBuffer) -> RgbImage {
    let unit = match img.range() {
        PixelRange::Unit => img.clone(),
        PixelRange::Signed => img.map(|v| (v + 1.0) * 0.5),
    };
    let q = |v: f32| (v.clamp(0.0, 1.0) * 255.0 + 0.5).floor() as u8;
    let mut raw = Vec::with_capacity(img.width() * img.height() * 3);
    for px in unit.data().chunks_exact(img.channels()) {
        match img.channels() {
            1 | 2 => raw.extend([q(px[0]); 3]),
            _ => raw.extend([q(px[0]), q(px[1]), q(px[2])]),
        }
    }
    RgbImage::from_raw(img.width() as u32, img.height() as u32, raw).expect("buffer sized for image")
}

pub fn write_png(path: &Path, img: &ImageBuffer) -> Result<()> {
    to_rgb8(img)
        .save_with_format(path, image::ImageFormat::Png)
        .map_err(|source| ImagingError::Write { path: path.to_path_buf(), source })
}

/// Round-trips a buffer through 8-bit quantization, matching what a PNG
/// write followed by a read would produce.
pub fn quantize8(img: &ImageBuffer) -> ImageBuffer {
    from_dynamic(&DynamicImage::ImageRgb8(to_rgb8(img)))
}
