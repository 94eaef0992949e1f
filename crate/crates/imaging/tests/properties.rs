use iegan_imaging::color::luminance;
use iegan_imaging::degrade::{bicubic_resize, jpeg_degrade, make_pair, DegradeSpec, Task};
use iegan_imaging::filter::gaussian_blur;
use iegan_imaging::metrics::{haarpsi, psnr, score_images, MetricMode, MetricReport};
use iegan_imaging::{synth, ImageBuffer, Plane};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn flat(img: &ImageBuffer) -> Plane {
    Plane::new(img.data().len(), 1, img.data().iter().map(|&v| v as f64).collect()).unwrap()
}

#[test]
fn every_metric_degrades_along_a_noise_ladder() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for seed in 0..5 {
        let reference = luminance(&synth::scene(48, 48, seed));
        let noise: Vec<f64> = (0..reference.data.len()).map(|_| rng.gen::<f64>() - 0.5).collect();
        let ladder: Vec<_> = (1..=10)
            .map(|k| {
                let sd = 0.01 * k as f64;
                let data = reference.data.iter().zip(&noise).map(|(v, n)| v + sd * n * 12f64.sqrt()).collect();
                let noisy = Plane::new(48, 48, data).unwrap();
                iegan_imaging::metrics::Scores::of_planes(&reference, &noisy).unwrap()
            })
            .collect();
        for pair in ladder.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            assert!(a.psnr > b.psnr, "psnr {a:?} {b:?}");
            assert!(a.ssim > b.ssim, "ssim {a:?} {b:?}");
            assert!(a.gmsd < b.gmsd, "gmsd {a:?} {b:?}");
            assert!(a.haarpsi > b.haarpsi, "haarpsi {a:?} {b:?}");
        }
    }
}

#[test]
fn haarpsi_drops_as_blur_grows() {
    for seed in 0..5 {
        let x = luminance(&synth::scene(48, 48, 40 + seed));
        let scores: Vec<f64> = [0.5, 1.0, 2.0]
            .iter()
            .map(|&s| haarpsi(&x, &gaussian_blur(&x, 9, s).unwrap()).unwrap())
            .collect();
        assert!(scores[0] > scores[1] && scores[1] > scores[2], "{scores:?}");
    }
}

#[test]
fn jpeg_quality_ladder_is_monotone() {
    for seed in 0..10 {
        let img = synth::scene(48, 48, 500 + seed);
        let p: Vec<f64> = [90, 50, 30, 10]
            .iter()
            .map(|&q| psnr(&flat(&img), &flat(&jpeg_degrade(&img, q).unwrap()), 1.0).unwrap())
            .collect();
        assert!(p.windows(2).all(|w| w[0] >= w[1]), "seed {seed}: {p:?}");
    }
}

#[test]
fn jpeg_recompression_stabilizes() {
    for seed in 0..10 {
        let img = synth::scene(48, 48, 900 + seed);
        let once = jpeg_degrade(&img, 10).unwrap();
        let twice = jpeg_degrade(&once, 10).unwrap();
        let first = psnr(&flat(&img), &flat(&once), 1.0).unwrap();
        let second = psnr(&flat(&once), &flat(&twice), 1.0).unwrap();
        assert!(second > first, "seed {seed}: {second} <= {first}");
    }
}

#[test]
fn sr_baseline_is_reproducible() {
    let spec = DegradeSpec::new(Task::Sr, 10, 2, 32).unwrap();
    let img = synth::scene(32, 32, 3);
    let (lr, gt) = make_pair(&img, &spec).unwrap();
    let up = bicubic_resize(&lr, gt.width(), gt.height()).unwrap();
    let a = score_images(&up, &gt, MetricMode::Luma).unwrap();
    let b = score_images(&up, &gt, MetricMode::Luma).unwrap();
    assert_eq!(a, b);
    assert!(a.psnr.is_finite() && a.psnr > 15.0);
}

#[test]
fn identity_evaluation_hits_ideal_points() {
    let mut report = MetricReport::default();
    for seed in 0..3 {
        let img = synth::scene(32, 32, seed);
        for mode in [MetricMode::Luma, MetricMode::RgbMean] {
            let s = score_images(&img, &img, mode).unwrap();
            assert_eq!((s.psnr, s.ssim, s.gmsd, s.haarpsi), (f64::INFINITY, 1.0, 0.0, 1.0));
            report.push(format!("{seed}.png"), s);
        }
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.csv");
    report.write_csv(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().last().unwrap(), "mean,inf,1,0,1");
}
