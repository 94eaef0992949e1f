use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Scores;
use crate::{ImagingError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub file: String,
    pub scores: Scores,
}

/// Per-image scores plus their means. The aggregate PSNR is infinite as soon
/// as one row is.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub rows: Vec<MetricRow>,
}

pub const AGGREGATE_LABEL: &str = "mean";

fn fmt_value(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".to_string()
    } else {
        format!("{v}")
    }
}

impl MetricReport {
    pub fn push(&mut self, file: impl Into<String>, scores: Scores) {
        self.rows.push(MetricRow { file: file.into(), scores });
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn aggregate(&self) -> Option<Scores> {
        if self.rows.is_empty() {
            return None;
        }
        let n = self.rows.len() as f64;
        let mean = |f: fn(&Scores) -> f64| self.rows.iter().map(|r| f(&r.scores)).sum::<f64>() / n;
        Some(Scores {
            psnr: mean(|s| s.psnr),
            ssim: mean(|s| s.ssim),
            gmsd: mean(|s| s.gmsd),
            haarpsi: mean(|s| s.haarpsi),
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("file,psnr,ssim,gmsd,haarpsi\n");
        let rows = self.rows.iter().map(|r| (r.file.as_str(), r.scores));
        for (file, s) in rows.chain(self.aggregate().map(|s| (AGGREGATE_LABEL, s))) {
            let _ = writeln!(
                out,
                "{file},{},{},{},{}",
                fmt_value(s.psnr),
                fmt_value(s.ssim),
                fmt_value(s.gmsd),
                fmt_value(s.haarpsi)
            );
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|source| ImagingError::Io { path: path.to_path_buf(), source })
    }

    /// Fixed-width table for terminals.
    pub fn to_table(&self) -> String {
        let width = self
            .rows
            .iter()
            .map(|r| r.file.len())
            .chain([AGGREGATE_LABEL.len(), 4])
            .max()
            .unwrap_or(4);
        let mut out = format!("{:<width$}  {:>9}  {:>7}  {:>7}  {:>7}\n", "file", "PSNR", "SSIM", "GMSD", "HaarPSI");
        let line = |out: &mut String, name: &str, s: &Scores| {
            let _ = writeln!(
                out,
                "{name:<width$}  {:>9.3}  {:>7.4}  {:>7.4}  {:>7.4}",
                s.psnr, s.ssim, s.gmsd, s.haarpsi
            );
        };
        for r in &self.rows {
            line(&mut out, &r.file, &r.scores);
        }
        if let Some(agg) = self.aggregate() {
            line(&mut out, AGGREGATE_LABEL, &agg);
        }
        out
    }
}
