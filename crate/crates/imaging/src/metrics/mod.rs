//! Full-reference quality metrics. Scalar metrics work on [`Plane`]s with
//! values in `[0, 1]`; [`score_images`] applies them to whole images either on
//! luma or as a per-channel RGB average.

mod gmsd;
mod haarpsi;
mod report;
mod ssim;

pub use gmsd::{gmsd, GMSD_C};
pub use haarpsi::{haarpsi, HAARPSI_ALPHA, HAARPSI_C};
pub use report::{MetricReport, MetricRow};
pub use ssim::{ssim, SSIM_K1, SSIM_K2, SSIM_SIGMA, SSIM_WINDOW};

use serde::{Deserialize, Serialize};

use crate::color::luminance;
use crate::{ImageBuffer, ImagingError, Plane, Result};

pub(crate) fn check_same(op: &'static str, a: &Plane, b: &Plane) -> Result<()> {
    if !a.same_dims(b) {
        return Err(ImagingError::dim(
            op,
            format!("{}x{} vs {}x{}", a.width, a.height, b.width, b.height),
        ));
    }
    Ok(())
}

fn mse(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64
}

fn psnr_from_mse(mse: f64, peak: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (peak * peak / mse).log10()
    }
}

/// Peak signal-to-noise ratio in dB; identical inputs give `f64::INFINITY`.
pub fn psnr(a: &Plane, b: &Plane, peak: f64) -> Result<f64> {
    check_same("psnr", a, b)?;
    Ok(psnr_from_mse(mse(&a.data, &b.data), peak))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricMode {
    /// BT.601 luma only.
    #[default]
    Luma,
    /// Each RGB channel scored separately and averaged; PSNR uses the pooled MSE.
    RgbMean,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub psnr: f64,
    pub ssim: f64,
    pub gmsd: f64,
    pub haarpsi: f64,
}

impl Scores {
    pub fn of_planes(a: &Plane, b: &Plane) -> Result<Scores> {
        Ok(Scores { psnr: psnr(a, b, 1.0)?, ssim: ssim(a, b)?, gmsd: gmsd(a, b)?, haarpsi: haarpsi(a, b)? })
    }
}

fn luma_plane(img: &ImageBuffer) -> Plane {
    if img.channels() == 1 {
        img.plane(0)
    } else {
        luminance(img)
    }
}

pub fn score_images(a: &ImageBuffer, b: &ImageBuffer, mode: MetricMode) -> Result<Scores> {
    if !a.same_dims(b) {
        return Err(ImagingError::dim(
            "score_images",
            format!(
                "{}x{}x{} vs {}x{}x{}",
                a.width(),
                a.height(),
                a.channels(),
                b.width(),
                b.height(),
                b.channels()
            ),
        ));
    }
    match mode {
        MetricMode::Luma => Scores::of_planes(&luma_plane(a), &luma_plane(b)),
        MetricMode::RgbMean => {
            let c = a.channels();
            let (mut s, mut g, mut h) = (0.0, 0.0, 0.0);
            let (mut se, mut n) = (0.0, 0usize);
            for ch in 0..c {
                let (pa, pb) = (a.plane(ch), b.plane(ch));
                se += mse(&pa.data, &pb.data) * pa.data.len() as f64;
                n += pa.data.len();
                s += ssim(&pa, &pb)?;
                g += gmsd(&pa, &pb)?;
                h += haarpsi(&pa, &pb)?;
            }
            let c = c as f64;
            Ok(Scores { psnr: psnr_from_mse(se / n as f64, 1.0), ssim: s / c, gmsd: g / c, haarpsi: h / c })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pattern(w: usize, h: usize, phase: f64) -> Plane {
        Plane::from_fn(w, h, |x, y| 0.5 + 0.4 * ((x as f64 * 0.7 + phase).sin() * (y as f64 * 0.45).cos()))
    }

    #[test]
    fn psnr_of_constant_offset_is_twenty_db() {
        let a = Plane::from_fn(8, 8, |_, _| 0.3);
        let b = a.map(|v| v + 0.1);
        assert!((psnr(&a, &b, 1.0).unwrap() - 20.0).abs() < 1e-9);
    }

    #[test]
    fn identical_inputs_hit_ideal_points() {
        let a = pattern(24, 20, 0.0);
        let s = Scores::of_planes(&a, &a).unwrap();
        assert_eq!(s.psnr, f64::INFINITY);
        assert_eq!(s.ssim, 1.0);
        assert_eq!(s.gmsd, 0.0);
        assert_eq!(s.haarpsi, 1.0);
    }

    #[test]
    fn metrics_are_symmetric() {
        let a = pattern(24, 24, 0.0);
        let b = pattern(24, 24, 0.3);
        assert_eq!(Scores::of_planes(&a, &b).unwrap(), Scores::of_planes(&b, &a).unwrap());
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let a = pattern(16, 16, 0.0);
        let b = pattern(16, 12, 0.0);
        assert!(matches!(psnr(&a, &b, 1.0), Err(ImagingError::Dimension { .. })));
        assert!(gmsd(&a, &b).is_err());
    }

    #[test]
    fn rgb_mean_mode_matches_luma_on_gray() {
        let g = pattern(16, 16, 0.0);
        let h = pattern(16, 16, 0.2);
        let to_rgb = |p: &Plane| ImageBuffer::from_planes(&[p.clone(), p.clone(), p.clone()], Default::default()).unwrap();
        let (a, b) = (to_rgb(&g), to_rgb(&h));
        let luma = score_images(&a, &b, MetricMode::Luma).unwrap();
        let rgb = score_images(&a, &b, MetricMode::RgbMean).unwrap();
        assert!((luma.ssim - rgb.ssim).abs() < 1e-6);
        assert!((luma.psnr - rgb.psnr).abs() < 1e-4);
    }
}
