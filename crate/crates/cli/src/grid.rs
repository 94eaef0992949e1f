//! Labeled side-by-side contact sheets.

use std::path::Path;

use iegan_imaging::degrade::bicubic_resize;
use iegan_imaging::io::write_png;
use iegan_imaging::ImageBuffer;

use crate::{HarnessError, Result};

const GAP: usize = 4;
const MARGIN: usize = 3;
const GLYPH_W: usize = 5;
const GLYPH_H: usize = 7;

/// Rows of a 5x7 glyph, most significant of the low five bits on the left.
fn glyph(c: char) -> [u8; 7] {
    match c.to_ascii_uppercase() {
        'A' => [0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11],
        'B' => [0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E],
        'C' => [0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E],
        'D' => [0x1E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x1E],
        'E' => [0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F],
        'F' => [0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10],
        'G' => [0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F],
        'H' => [0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11],
        'I' => [0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E],
        'J' => [0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C],
        'K' => [0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11],
        'L' => [0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F],
        'M' => [0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11],
        'N' => [0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11],
        'O' => [0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E],
        'P' => [0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10],
        'Q' => [0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D],
        'R' => [0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11],
        'S' => [0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E],
        'T' => [0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04],
        'U' => [0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E],
        'V' => [0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04],
        'W' => [0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A],
        'X' => [0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11],
        'Y' => [0x11, 0x11, 0x11, 0x0A, 0x04, 0x04, 0x04],
        'Z' => [0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F],
        '0' => [0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E],
        '1' => [0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E],
        '2' => [0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F],
        '3' => [0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E],
        '4' => [0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02],
        '5' => [0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E],
        '6' => [0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E],
        '7' => [0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08],
        '8' => [0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E],
        '9' => [0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C],
        '.' => [0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C],
        ',' => [0x00, 0x00, 0x00, 0x00, 0x0C, 0x04, 0x08],
        ':' => [0x00, 0x0C, 0x0C, 0x00, 0x0C, 0x0C, 0x00],
        '-' => [0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00],
        '+' => [0x00, 0x04, 0x04, 0x1F, 0x04, 0x04, 0x00],
        '=' => [0x00, 0x00, 0x1F, 0x00, 0x1F, 0x00, 0x00],
        '_' => [0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x1F],
        '/' => [0x00, 0x01, 0x02, 0x04, 0x08, 0x10, 0x00],
        '(' => [0x02, 0x04, 0x08, 0x08, 0x08, 0x04, 0x02],
        ')' => [0x08, 0x04, 0x02, 0x02, 0x02, 0x04, 0x08],
        '%' => [0x18, 0x19, 0x02, 0x04, 0x08, 0x13, 0x03],
        ' ' => [0; 7],
        _ => [0x1F, 0x11, 0x11, 0x11, 0x11, 0x11, 0x1F],
    }
}

/// Pixel width of `text` at integer `zoom`.
pub fn text_width(text: &str, zoom: usize) -> usize {
    let n = text.chars().count();
    if n == 0 {
        0
    } else {
        (n * (GLYPH_W + 1) - 1) * zoom
    }
}

fn draw_text(canvas: &mut ImageBuffer, text: &str, x0: usize, y0: usize, zoom: usize) {
    for (i, ch) in text.chars().enumerate() {
        let rows = glyph(ch);
        for (gy, bits) in rows.iter().enumerate() {
            for gx in 0..GLYPH_W {
                if bits >> (GLYPH_W - 1 - gx) & 1 == 0 {
                    continue;
                }
                for dy in 0..zoom {
                    for dx in 0..zoom {
                        let x = x0 + (i * (GLYPH_W + 1) + gx) * zoom + dx;
                        let y = y0 + gy * zoom + dy;
                        if x < canvas.width() && y < canvas.height() {
                            for c in 0..canvas.channels() {
                                canvas.set(x, y, c, 0.0);
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Lays `images` out left to right under their labels on a white sheet.
/// Images are resized to the tallest height, keeping their aspect ratio.
pub fn render_grid(images: &[ImageBuffer], labels: &[&str]) -> Result<ImageBuffer> {
    if images.is_empty() {
        return Err(HarnessError::Contract("grid needs at least one image".into()));
    }
    if labels.len() != images.len() {
        return Err(HarnessError::Contract(format!("{} labels for {} images", labels.len(), images.len())));
    }
    let h = images.iter().map(|i| i.height()).max().unwrap_or(1);
    let tiles = images
        .iter()
        .map(|img| {
            let rgb = if img.channels() == 3 {
                img.clone()
            } else {
                ImageBuffer::from_fn(img.width(), img.height(), 3, |x, y, _| img.get(x, y, 0))
            };
            if rgb.height() == h {
                Ok(rgb.clamp_unit())
            } else {
                let w = ((rgb.width() * h) as f64 / rgb.height() as f64).round().max(1.0) as usize;
                Ok(bicubic_resize(&rgb, w, h)?.clamp_unit())
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let zoom = if h >= 96 { 2 } else { 1 };
    let band = GLYPH_H * zoom + 2 * MARGIN;
    let widths: Vec<usize> = tiles.iter().zip(labels).map(|(t, l)| t.width().max(text_width(l, zoom))).collect();
    let total_w = widths.iter().sum::<usize>() + GAP * (tiles.len() + 1);
    let total_h = band + h + GAP;
    let mut canvas = ImageBuffer::filled(total_w, total_h, &[1.0, 1.0, 1.0]);
    let mut x0 = GAP;
    for ((tile, label), &w) in tiles.iter().zip(labels).zip(&widths) {
        draw_text(&mut canvas, label, x0, MARGIN, zoom);
        let dx = x0 + (w - tile.width()) / 2;
        for y in 0..tile.height() {
            for x in 0..tile.width() {
                for c in 0..3 {
                    canvas.set(dx + x, band + y, c, tile.get(x, y, c));
                }
            }
        }
        x0 += w + GAP;
    }
    Ok(canvas)
}

pub fn emit_grid(images: &[ImageBuffer], labels: &[&str], path: &Path) -> Result<ImageBuffer> {
    let canvas = render_grid(images, labels)?;
    write_png(path, &canvas)?;
    Ok(canvas)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_printable_label_character_has_a_glyph() {
        for c in "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789.,:-+=_/()% ".chars() {
            assert_ne!(glyph(c), glyph('\u{1}'), "{c:?}");
        }
    }

    #[test]
    fn text_is_drawn_in_black() {
        let mut canvas = ImageBuffer::filled(20, 10, &[1.0, 1.0, 1.0]);
        draw_text(&mut canvas, "I", 0, 0, 1);
        assert_eq!(canvas.get(2, 3, 0), 0.0);
        assert_eq!(canvas.get(0, 3, 0), 1.0);
    }
}
