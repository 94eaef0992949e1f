//! Manifests, in-memory datasets and `(seed, step)`-keyed batch sampling.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use iegan_imaging::degrade::{make_pair, scale_range, DegradeSpec};
use iegan_imaging::io::{read_image, write_png};
use iegan_imaging::{synth, ImageBuffer, PixelRange};
use iegan_tensor::Tensor;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::convert::images_to_tensor;
use crate::{CoreError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Eval,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub gt_path: PathBuf,
    /// Externally degraded counterpart, used instead of the simulator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lr_path: Option<PathBuf>,
    pub split: Split,
}

#[derive(Serialize, Deserialize)]
struct ManifestHeader {
    spec: DegradeSpec,
    seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Manifest {
    pub spec: DegradeSpec,
    pub seed: u64,
    pub entries: Vec<ManifestEntry>,
    /// Files skipped during [`Manifest::build`] because they did not decode.
    pub skipped: usize,
}

fn list_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| CoreError::io(dir, e))? {
        let entry = entry.map_err(|e| CoreError::io(dir, e))?;
        let path = entry.path();
        let hidden = path.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with('.'));
        if path.is_file() && !hidden {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

impl Manifest {
    /// Every decodable file in `dir` (sorted by name), shuffled with `seed`;
    /// the first `round(n * train_frac)` become the training split.
    pub fn build(dir: &Path, spec: DegradeSpec, train_frac: f64, seed: u64) -> Result<Self> {
        spec.validate()?;
        if !(0.0..=1.0).contains(&train_frac) {
            return Err(CoreError::contract("build_manifest", format!("split fraction {train_frac} outside [0, 1]")));
        }
        let mut usable = Vec::new();
        let mut skipped = 0;
        for path in list_files(dir)? {
            match read_image(&path) {
                Ok(_) => usable.push(path),
                Err(e) => {
                    log::warn!("skipping {}: {e}", path.display());
                    skipped += 1;
                }
            }
        }
        if usable.is_empty() {
            return Err(CoreError::EmptyDataset(dir.to_path_buf()));
        }
        if skipped > 0 {
            log::warn!("{skipped} undecodable file(s) skipped in {}", dir.display());
        }
        usable.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let n_train = (usable.len() as f64 * train_frac).round() as usize;
        let entries = usable
            .into_iter()
            .enumerate()
            .map(|(i, gt_path)| ManifestEntry {
                gt_path,
                lr_path: None,
                split: if i < n_train { Split::Train } else { Split::Eval },
            })
            .collect();
        Ok(Manifest { spec, seed, entries, skipped })
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.split == split)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::to_string(&ManifestHeader { spec: self.spec, seed: self.seed }).expect("header");
        out.push('\n');
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e).expect("entry"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let json = |i: usize, e| CoreError::Json { what: format!("manifest line {}", i + 1), source: e };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (i, first) = lines.next().ok_or_else(|| CoreError::contract("manifest", "empty manifest"))?;
        let header: ManifestHeader = serde_json::from_str(first).map_err(|e| json(i, e))?;
        header.spec.validate()?;
        let entries = lines
            .map(|(i, l)| serde_json::from_str::<ManifestEntry>(l).map_err(|e| json(i, e)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Manifest { spec: header.spec, seed: header.seed, entries, skipped: 0 })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = fs::File::create(path).map_err(|e| CoreError::io(path, e))?;
        f.write_all(self.to_jsonl().as_bytes()).map_err(|e| CoreError::io(path, e))
    }

    /// Reads a manifest and checks that every referenced file exists.
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CoreError::io(path, e))?;
        let m = Self::from_jsonl(&text)?;
        for e in &m.entries {
            for p in std::iter::once(&e.gt_path).chain(e.lr_path.as_ref()) {
                if !p.is_file() {
                    return Err(CoreError::io(p, std::io::Error::new(std::io::ErrorKind::NotFound, "listed in manifest")));
                }
            }
        }
        Ok(m)
    }
}

/// Network-domain batch: both tensors in `[-1, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    pub lr: Tensor<f32>,
    pub gt: Tensor<f32>,
}

#[derive(Clone, Debug)]
pub struct Sample {
    pub path: PathBuf,
    pub gt: ImageBuffer,
    pub lr: Option<ImageBuffer>,
}

/// Decoded images of a manifest, held in memory.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub spec: DegradeSpec,
    pub train: Vec<Sample>,
    pub eval: Vec<Sample>,
}

impl Dataset {
    pub fn load(manifest: &Manifest) -> Result<Self> {
        let load = |split| -> Result<Vec<Sample>> {
            manifest
                .split(split)
                .map(|e| {
                    Ok(Sample {
                        path: e.gt_path.clone(),
                        gt: read_image(&e.gt_path)?,
                        lr: e.lr_path.as_deref().map(read_image).transpose()?,
                    })
                })
                .collect()
        };
        Ok(Dataset { spec: manifest.spec, train: load(Split::Train)?, eval: load(Split::Eval)? })
    }

    /// Batch for `step`, a pure function of `(seed, step)` and the dataset.
    /// Images are drawn without replacement when the split is large enough,
    /// then cropped at a random offset aligned to the scale.
    pub fn next_batch(&self, batch_size: usize, seed: u64, step: u64) -> Result<Batch> {
        if self.train.is_empty() {
            return Err(CoreError::contract("next_batch", "training split is empty"));
        }
        if batch_size == 0 {
            return Err(CoreError::contract("next_batch", "batch size must be positive"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(step);
        let n = self.train.len();
        let picks: Vec<usize> = if batch_size <= n {
            rand::seq::index::sample(&mut rng, n, batch_size).into_vec()
        } else {
            (0..batch_size).map(|_| rng.gen_range(0..n)).collect()
        };
        let (patch, s) = (self.spec.patch, self.spec.scale);
        let mut lrs = Vec::with_capacity(batch_size);
        let mut gts = Vec::with_capacity(batch_size);
        for i in picks {
            let sample = &self.train[i];
            let img = &sample.gt;
            if img.width() < patch || img.height() < patch {
                return Err(CoreError::contract(
                    "next_batch",
                    format!("{} is {}x{}, smaller than patch {patch}", sample.path.display(), img.width(), img.height()),
                ));
            }
            let x = rng.gen_range(0..=(img.width() - patch) / s) * s;
            let y = rng.gen_range(0..=(img.height() - patch) / s) * s;
            let gt = img.crop(x, y, patch, patch)?;
            let lr = match &sample.lr {
                Some(lr) => lr.crop(x / s, y / s, patch / s, patch / s)?,
                None => make_pair(&gt, &self.spec)?.0,
            };
            lrs.push(scale_range(&lr, PixelRange::Signed));
            gts.push(scale_range(&gt, PixelRange::Signed));
        }
        Ok(Batch { lr: images_to_tensor(&lrs)?, gt: images_to_tensor(&gts)? })
    }
}

/// Writes `count` procedural `size x size` PNG scenes named `scene_NNNN.png`.
pub fn write_synthetic_corpus(dir: &Path, count: usize, size: usize, seed: u64) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| CoreError::io(dir, e))?;
    (0..count)
        .map(|i| {
            let path = dir.join(format!("scene_{i:04}.png"));
            write_png(&path, &synth::scene(size, size, seed.wrapping_add(i as u64)))?;
            Ok(path)
        })
        .collect()
}
