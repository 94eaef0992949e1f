//! Moving images in and out of NCHW tensors.

use iegan_imaging::{ImageBuffer, PixelRange};
use iegan_tensor::Tensor;

use crate::{CoreError, Result};

/// Stack equally sized images into `[n, c, h, w]`; samples are copied as-is.
pub fn images_to_tensor(images: &[ImageBuffer]) -> Result<Tensor<f32>> {
    let first = images.first().ok_or_else(|| CoreError::contract("images_to_tensor", "no images"))?;
    let (w, h, c) = (first.width(), first.height(), first.channels());
    let mut data = Vec::with_capacity(images.len() * c * h * w);
    for img in images {
        if !img.same_dims(first) {
            return Err(CoreError::contract(
                "images_to_tensor",
                format!("{}x{}x{} differs from {w}x{h}x{c}", img.width(), img.height(), img.channels()),
            ));
        }
        for ch in 0..c {
            for y in 0..h {
                for x in 0..w {
                    data.push(img.get(x, y, ch));
                }
            }
        }
    }
    Ok(Tensor::new(&[images.len(), c, h, w], data)?)
}

pub fn tensor_to_images(t: &Tensor<f32>, range: PixelRange) -> Result<Vec<ImageBuffer>> {
    let [n, c, h, w] = t.dims4("tensor_to_images")?;
    let d = t.data();
    (0..n)
        .map(|i| {
            let base = i * c * h * w;
            let img = ImageBuffer::from_fn(w, h, c, |x, y, ch| d[base + (ch * h + y) * w + x]);
            Ok(img.with_range(range))
        })
        .collect()
}
