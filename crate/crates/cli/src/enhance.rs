use std::path::Path;

use iegan_core::convert::{images_to_tensor, tensor_to_images};
use iegan_core::models::Generator;
use iegan_core::trainer::load_generator;
use iegan_imaging::degrade::scale_range;
use iegan_imaging::filter::reflect101;
use iegan_imaging::io::{read_image, write_png};
use iegan_imaging::{ImageBuffer, PixelRange};

use crate::Result;

/// Mirror-pads on the right and bottom up to multiples of `m`.
pub fn pad_to_multiple(img: &ImageBuffer, m: usize) -> ImageBuffer {
    let (w, h) = (img.width(), img.height());
    let (pw, ph) = (w.div_ceil(m) * m, h.div_ceil(m) * m);
    if (pw, ph) == (w, h) {
        return img.clone();
    }
    ImageBuffer::from_fn(pw, ph, img.channels(), |x, y, c| {
        img.get(reflect101(x as isize, w), reflect101(y as isize, h), c)
    })
    .with_range(img.range())
}

/// Runs the generator on a `[0, 1]` image of any size. The output is
/// `upscale` times the input size, clamped to `[0, 1]`.
pub fn enhance(generator: &Generator, img: &ImageBuffer) -> Result<ImageBuffer> {
    let mut g = generator.clone();
    let padded = pad_to_multiple(img, g.config.multiple());
    let x = images_to_tensor(&[scale_range(&padded, PixelRange::Signed)])?;
    let y = g.infer(&x)?;
    let out = tensor_to_images(&y, PixelRange::Signed)?.remove(0);
    let s = g.config.upscale();
    let out = scale_range(&out, PixelRange::Unit).crop(0, 0, img.width() * s, img.height() * s)?;
    Ok(out.clamp_unit())
}

pub fn cmd_enhance(checkpoint: &Path, input: &Path, output: &Path) -> Result<ImageBuffer> {
    let (_, generator) = load_generator(checkpoint)?;
    let img = read_image(input)?;
    let out = enhance(&generator, &img)?;
    write_png(output, &out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn padding_mirrors_without_repeating_the_border() {
        let img = ImageBuffer::from_fn(3, 2, 1, |x, y, _| (x + 10 * y) as f32);
        let p = pad_to_multiple(&img, 4);
        assert_eq!((p.width(), p.height()), (4, 4));
        assert_eq!(p.get(3, 0, 0), 1.0);
        assert_eq!(p.get(0, 2, 0), 0.0);
        assert_eq!(p.get(0, 3, 0), 10.0);
        assert_eq!(pad_to_multiple(&img, 1), img);
    }
}
