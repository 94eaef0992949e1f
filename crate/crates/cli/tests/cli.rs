//! Drives the `iegan` binary end to end on a tiny synthetic corpus.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use iegan_imaging::io::{read_image, write_png};
use iegan_imaging::synth;

const MICRO: &str = r#"{
  "split_frac": 0.75,
  "train": {
    "task": { "task": "arsr", "quality": 10, "scale": 2, "patch": 16 },
    "generator": { "base_channels": 4, "depth": 1 },
    "disc_widths": [4, 4, 4],
    "disc_hidden": 8,
    "features": { "widths": [4, 8], "convs_per_stage": 1, "tap": [2, 1] },
    "batch_size": 2,
    "iterations": 6,
    "checkpoint_every": 3
  }
}"#;

fn iegan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_iegan")).args(args).env("IEGAN_THREADS", "1").output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = iegan(args);
    assert!(
        out.status.success(),
        "{args:?} failed ({:?}): {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Fixture {
    _dir: tempfile::TempDir,
    root: PathBuf,
    corpus: PathBuf,
    config: PathBuf,
}

fn fixture() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().to_path_buf();
    let corpus = root.join("corpus");
    ok(&["synth", "--output", s(&corpus), "--count", "8", "--size", "24", "--seed", "5"]);
    let config = root.join("micro.json");
    fs::write(&config, MICRO).unwrap();
    Fixture { _dir: dir, root, corpus, config }
}

fn train(f: &Fixture, out: &Path, extra: &[&str]) {
    let mut args = vec!["train", "--config", s(&f.config), "--data", s(&f.corpus), "--out", s(out)];
    args.extend_from_slice(extra);
    ok(&args);
}

#[test]
fn synth_train_eval_enhance_pipeline() {
    let f = fixture();
    assert_eq!(fs::read_dir(&f.corpus).unwrap().count(), 8);

    let run = f.root.join("run");
    train(&f, &run, &[]);
    for name in ["loss_log.csv", "final.ckpt", "step_000003.ckpt", "manifest.jsonl", "experiment.json"] {
        assert!(run.join(name).is_file(), "missing {name}");
    }
    let log = fs::read_to_string(run.join("loss_log.csv")).unwrap();
    assert_eq!(log.lines().count(), 7);

    let ckpt = run.join("final.ckpt");
    let ev = f.root.join("eval");
    let table = ok(&["eval", "--checkpoint", s(&ckpt), "--data", s(&run.join("manifest.jsonl")), "--out", s(&ev), "--grid", "2"]);
    assert!(table.contains("gmsd") || table.contains("GMSD"), "{table}");
    let csv = fs::read_to_string(ev.join("eval.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 3, "{csv}");
    let grids: Vec<_> = fs::read_dir(&ev)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().starts_with("grid_"))
        .collect();
    assert_eq!(grids.len(), 2);
    let grid = read_image(&grids[0].path()).unwrap();
    assert!(grid.width() >= 4 * 16 && grid.width() > grid.height());

    let input = f.root.join("small.png");
    write_png(&input, &synth::scene(13, 9, 2)).unwrap();
    let (a, b) = (f.root.join("a.png"), f.root.join("b.png"));
    ok(&["enhance", "--checkpoint", s(&ckpt), "--input", s(&input), "--output", s(&a)]);
    ok(&["enhance", "--checkpoint", s(&ckpt), "--input", s(&input), "--output", s(&b)]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let up = read_image(&a).unwrap();
    assert_eq!((up.width(), up.height()), (26, 18));
}

#[test]
fn reruns_and_resumes_write_identical_logs() {
    let f = fixture();
    let (a, b, c) = (f.root.join("a"), f.root.join("b"), f.root.join("c"));
    train(&f, &a, &[]);
    train(&f, &b, &[]);
    train(&f, &c, &["--resume", s(&a.join("step_000003.ckpt"))]);
    let log = fs::read(a.join("loss_log.csv")).unwrap();
    assert_eq!(log, fs::read(b.join("loss_log.csv")).unwrap());
    assert_eq!(log, fs::read(c.join("loss_log.csv")).unwrap());
    assert_eq!(fs::read(a.join("final.ckpt")).unwrap(), fs::read(c.join("final.ckpt")).unwrap());
}

#[test]
fn artifact_removal_keeps_the_input_size() {
    let f = fixture();
    let run = f.root.join("ar");
    train(&f, &run, &["--task", "ar", "--quality", "10", "--patch", "16", "--iterations", "2"]);
    let input = f.root.join("in.png");
    write_png(&input, &synth::scene(21, 11, 4)).unwrap();
    let out = f.root.join("out.png");
    ok(&["enhance", "--checkpoint", s(&run.join("final.ckpt")), "--input", s(&input), "--output", s(&out)]);
    let img = read_image(&out).unwrap();
    assert_eq!((img.width(), img.height()), (21, 11));
}

#[test]
fn baseline_rows_do_not_depend_on_the_model() {
    let f = fixture();
    let (a, b) = (f.root.join("a"), f.root.join("b"));
    train(&f, &a, &["--iterations", "1"]);
    train(&f, &b, &["--iterations", "4", "--seed", "9"]);
    let rows = |run: &Path| -> Vec<String> {
        let out = run.join("eval");
        ok(&["eval", "--checkpoint", s(&run.join("final.ckpt")), "--data", s(&f.corpus), "--out", s(&out)]);
        fs::read_to_string(out.join("eval.csv"))
            .unwrap()
            .lines()
            .filter(|l| !l.contains("model"))
            .map(String::from)
            .collect()
    };
    let (ra, rb) = (rows(&a), rows(&b));
    assert_eq!(ra.len(), 1 + 8 + 1);
    assert_eq!(ra, rb);
}

#[test]
fn degrade_writes_pairs_and_a_usable_manifest() {
    let f = fixture();
    let out = f.root.join("pairs");
    let text = ok(&["degrade", "--input", s(&f.corpus), "--output", s(&out), "--task", "sr", "--scale", "2", "--patch", "16"]);
    assert!(text.contains("8 pairs written"), "{text}");
    let lr = read_image(&out.join("lr").join(fs::read_dir(out.join("lr")).unwrap().next().unwrap().unwrap().file_name()))
        .unwrap();
    assert_eq!((lr.width(), lr.height()), (12, 12));

    let run = f.root.join("run");
    let mismatch = iegan(&[
        "train", "--config", s(&f.config), "--data", s(&out.join("manifest.jsonl")), "--out", s(&run),
    ]);
    assert_eq!(mismatch.status.code(), Some(2), "{}", String::from_utf8_lossy(&mismatch.stderr));
    let manifest = out.join("manifest.jsonl");
    ok(&["train", "--config", s(&f.config), "--data", s(&manifest), "--out", s(&run), "--task", "sr", "--scale", "2", "--patch", "16", "--iterations", "2"]);
}

#[test]
fn ablate_reports_every_cell() {
    let f = fixture();
    let out = f.root.join("ablation");
    let text = ok(&["ablate", "--data", s(&f.corpus), "--out", s(&out), "--config", s(&f.config), "--steps", "2"]);
    assert!(text.contains("32 metric values"), "{text}");
    let csv = fs::read_to_string(out.join("ablation.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 8, "{csv}");
}

#[test]
fn exit_codes_follow_the_error_kind() {
    let f = fixture();
    assert_eq!(iegan(&["train", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(iegan(&["train", "--config", s(&f.config), "--lr", "-1", "--data", s(&f.corpus)]).status.code(), Some(2));
    let missing = f.root.join("nowhere");
    let out = iegan(&["train", "--config", s(&f.config), "--data", s(&missing), "--out", s(&f.root.join("x"))]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nowhere"));
    let out = iegan(&["enhance", "--checkpoint", s(&missing), "--input", s(&missing), "--output", s(&missing)]);
    assert_eq!(out.status.code(), Some(3));
}
