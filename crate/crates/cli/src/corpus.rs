//! Dataset assembly: manifests from directories, and on-disk degraded pairs.

use std::fs;
use std::path::{Path, PathBuf};

use iegan_core::data::{Dataset, Manifest, ManifestEntry};
use iegan_imaging::degrade::{make_pair, DegradeSpec};
use iegan_imaging::io::{read_image, write_png};

use crate::eval::describe;
use crate::{HarnessError, Result};

pub const MANIFEST_FILE: &str = "manifest.jsonl";

/// A manifest file is read as-is and must match `spec`; a directory is listed
/// and split.
pub fn manifest_for(source: &Path, spec: DegradeSpec, split_frac: f64, seed: u64) -> Result<Manifest> {
    if source.is_file() {
        let m = Manifest::read(source)?;
        if m.spec != spec {
            return Err(HarnessError::Contract(format!(
                "manifest {} was built for {}, requested {}",
                source.display(),
                describe(&m.spec),
                describe(&spec)
            )));
        }
        Ok(m)
    } else {
        Ok(Manifest::build(source, spec, split_frac, seed)?)
    }
}

pub fn load_dataset(source: &Path, spec: DegradeSpec, split_frac: f64, seed: u64) -> Result<(Manifest, Dataset)> {
    let m = manifest_for(source, spec, split_frac, seed)?;
    let d = Dataset::load(&m)?;
    Ok((m, d))
}

#[derive(Clone, Debug, PartialEq)]
pub struct DegradeSummary {
    pub manifest: PathBuf,
    pub written: usize,
    /// Files that could not be decoded or are smaller than one patch.
    pub skipped: usize,
}

/// Writes `gt/` and `lr/` PNG pairs for every usable image in `input` plus a
/// manifest pointing at them, keeping the seeded split.
pub fn degrade_corpus(input: &Path, output: &Path, spec: DegradeSpec, split_frac: f64, seed: u64) -> Result<DegradeSummary> {
    let source = Manifest::build(input, spec, split_frac, seed)?;
    let (gt_dir, lr_dir) = (output.join("gt"), output.join("lr"));
    for d in [&gt_dir, &lr_dir] {
        fs::create_dir_all(d).map_err(|e| HarnessError::io(d, e))?;
    }
    let mut entries = Vec::new();
    let mut skipped = source.skipped;
    for e in &source.entries {
        let img = read_image(&e.gt_path)?;
        let (lr, gt) = match make_pair(&img, &spec) {
            Ok(p) => p,
            Err(err) => {
                log::warn!("skipping {}: {err}", e.gt_path.display());
                skipped += 1;
                continue;
            }
        };
        let name = format!("{}.png", e.gt_path.file_stem().and_then(|s| s.to_str()).unwrap_or("image"));
        let (gt_path, lr_path) = (gt_dir.join(&name), lr_dir.join(&name));
        write_png(&gt_path, &gt)?;
        write_png(&lr_path, &lr)?;
        entries.push(ManifestEntry { gt_path, lr_path: Some(lr_path), split: e.split });
    }
    let written = entries.len();
    let manifest = Manifest { entries, skipped, ..source };
    let path = output.join(MANIFEST_FILE);
    manifest.write(&path)?;
    Ok(DegradeSummary { manifest: path, written, skipped })
}
