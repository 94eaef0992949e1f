//! Construction of (degraded, ground-truth) pairs for artifact removal,
//! super-resolution and their combination.

mod jpeg;
mod resize;

pub use jpeg::{jpeg_degrade, scaled_table, CHROMA_TABLE, LUMA_TABLE};
pub use resize::bicubic_resize;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{ImageBuffer, ImagingError, PixelRange, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    /// Artifact removal.
    Ar,
    /// Super-resolution.
    Sr,
    /// Both at once.
    Arsr,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::Ar => "ar",
            Task::Sr => "sr",
            Task::Arsr => "arsr",
        })
    }
}

impl FromStr for Task {
    type Err = ImagingError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ar" => Ok(Task::Ar),
            "sr" => Ok(Task::Sr),
            "arsr" | "ar+sr" => Ok(Task::Arsr),
            other => Err(ImagingError::contract("task", format!("unknown task {other:?}; expected ar, sr or arsr"))),
        }
    }
}

impl Task {
    pub fn compresses(self) -> bool {
        matches!(self, Task::Ar | Task::Arsr)
    }

    pub fn downscales(self) -> bool {
        matches!(self, Task::Sr | Task::Arsr)
    }
}

/// Order of the two degradations for [`Task::Arsr`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArsrOrder {
    #[default]
    DownscaleFirst,
    CompressFirst,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DegradeSpec {
    pub task: Task,
    /// JPEG quality, used by compressing tasks.
    pub quality: u8,
    /// Downscale factor; always 1 for [`Task::Ar`].
    pub scale: usize,
    /// Ground-truth patch edge length.
    pub patch: usize,
    #[serde(default)]
    pub order: ArsrOrder,
}

impl DegradeSpec {
    pub fn new(task: Task, quality: u8, scale: usize, patch: usize) -> Result<Self> {
        let scale = if task == Task::Ar { 1 } else { scale };
        let spec = DegradeSpec { task, quality, scale, patch, order: ArsrOrder::default() };
        spec.validate()?;
        Ok(spec)
    }

    /// Published protocol: quality 10, scale 4, patches 256 (AR), 96 (SR), 128 (AR+SR).
    pub fn reference(task: Task) -> Self {
        let patch = match task {
            Task::Ar => 256,
            Task::Sr => 96,
            Task::Arsr => 128,
        };
        DegradeSpec { task, quality: 10, scale: if task == Task::Ar { 1 } else { 4 }, patch, order: ArsrOrder::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=100).contains(&self.quality) {
            return Err(ImagingError::contract("degrade_spec", format!("quality {} outside 1..=100", self.quality)));
        }
        match self.task {
            Task::Ar if self.scale != 1 => {
                return Err(ImagingError::contract("degrade_spec", format!("ar requires scale 1, got {}", self.scale)))
            }
            Task::Sr | Task::Arsr if !matches!(self.scale, 2 | 4) => {
                return Err(ImagingError::contract(
                    "degrade_spec",
                    format!("{} requires scale 2 or 4, got {}", self.task, self.scale),
                ))
            }
            _ => {}
        }
        if self.patch == 0 || self.patch % self.scale != 0 {
            return Err(ImagingError::contract(
                "degrade_spec",
                format!("patch {} must be a positive multiple of scale {}", self.patch, self.scale),
            ));
        }
        Ok(())
    }

    pub fn lr_patch(&self) -> usize {
        self.patch / self.scale
    }
}

fn downscale(img: &ImageBuffer, s: usize) -> Result<ImageBuffer> {
    bicubic_resize(img, img.width() / s, img.height() / s)
}

/// Degrade `img` according to `spec`. The ground truth is `img` cropped at the
/// origin to a multiple of the scale; the degraded image is `1/scale` its size.
pub fn make_pair(img: &ImageBuffer, spec: &DegradeSpec) -> Result<(ImageBuffer, ImageBuffer)> {
    spec.validate()?;
    if img.width() < spec.patch || img.height() < spec.patch {
        return Err(ImagingError::dim(
            "make_pair",
            format!("image {}x{} is smaller than patch {}", img.width(), img.height(), spec.patch),
        ));
    }
    let s = spec.scale;
    let gt = img.crop(0, 0, img.width() / s * s, img.height() / s * s)?;
    let lr = match (spec.task, spec.order) {
        (Task::Ar, _) => jpeg_degrade(&gt, spec.quality)?,
        (Task::Sr, _) => downscale(&gt, s)?,
        (Task::Arsr, ArsrOrder::DownscaleFirst) => jpeg_degrade(&downscale(&gt, s)?, spec.quality)?,
        (Task::Arsr, ArsrOrder::CompressFirst) => downscale(&jpeg_degrade(&gt, spec.quality)?, s)?,
    };
    Ok((lr, gt))
}

/// `count` crops of `size x size` at seeded uniform positions.
pub fn crop_patches(img: &ImageBuffer, size: usize, count: usize, seed: u64) -> Result<Vec<ImageBuffer>> {
    if size == 0 || img.width() < size || img.height() < size {
        return Err(ImagingError::dim(
            "crop_patches",
            format!("image {}x{} cannot hold {size}x{size} crops", img.width(), img.height()),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let x = rng.gen_range(0..=img.width() - size);
            let y = rng.gen_range(0..=img.height() - size);
            img.crop(x, y, size, size)
        })
        .collect()
}

/// Affine map between `[0, 1]` and `[-1, 1]`.
pub fn scale_range(img: &ImageBuffer, target: PixelRange) -> ImageBuffer {
    match (img.range(), target) {
        (PixelRange::Unit, PixelRange::Signed) => {
            img.map(|v| (2.0 * v as f64 - 1.0) as f32).with_range(PixelRange::Signed)
        }
        (PixelRange::Signed, PixelRange::Unit) => img.map(|v| ((v as f64 + 1.0) / 2.0) as f32).with_range(PixelRange::Unit),
        _ => img.clone(),
    }
}
