use std::path::Path;

use iegan_core::data::{write_synthetic_corpus, Dataset, Manifest};
use iegan_core::losses::{FeatureConfig, KState, LossKind};
use iegan_core::models::{DiscKind, GeneratorConfig};
use iegan_core::params::ParamSet;
use iegan_core::trainer::{
    read_log, replay_k, resume, train, Adam, AdamConfig, ReconMode, TrainConfig, TrainState, FINAL_CHECKPOINT, LOG_FILE,
};
use iegan_core::CoreError;
use iegan_imaging::degrade::{DegradeSpec, Task};
use iegan_tensor::Tensor;
use indexmap::IndexMap;

fn micro(task: DegradeSpec) -> TrainConfig {
    TrainConfig {
        generator: GeneratorConfig { base_channels: 4, depth: 1, p: 0, in_channels: 3, out_channels: 3 },
        disc_widths: [4, 4, 4],
        disc_hidden: 8,
        features: FeatureConfig { in_channels: 3, widths: vec![4, 8], convs_per_stage: 1, tap: (2, 1) },
        batch_size: 2,
        iterations: 100,
        checkpoint_every: 50,
        adam: AdamConfig { lr: 1e-3, ..AdamConfig::default() },
        ..TrainConfig::default()
    }
    .for_task(task)
}

fn arsr() -> DegradeSpec {
    DegradeSpec::new(Task::Arsr, 10, 2, 16).unwrap()
}

fn dataset(dir: &Path, spec: DegradeSpec) -> Dataset {
    let corpus = dir.join("corpus");
    write_synthetic_corpus(&corpus, 10, 24, 11).unwrap();
    let manifest = Manifest::build(&corpus, spec, 0.8, 3).unwrap();
    Dataset::load(&manifest).unwrap()
}

fn same_bytes(a: &Path, b: &Path) -> bool {
    std::fs::read(a).unwrap() == std::fs::read(b).unwrap()
}

#[test]
fn adam_matches_hand_computation() {
    let cfg = AdamConfig { lr: 0.1, beta1: 0.9, beta2: 0.999, eps: 1e-8 };
    let mut params = ParamSet::new();
    params.insert("w.weight", Tensor::new(&[2], vec![1.0f32, -2.0]).unwrap()).unwrap();
    let mut adam = Adam::new(cfg, &params);
    let grads = [[0.5, -1.0], [-0.25, 2.0], [1.0, 0.0]];
    let (mut w, mut m, mut v) = ([1.0f64, -2.0], [0.0f64; 2], [0.0f64; 2]);
    for (t, g) in grads.iter().enumerate() {
        let t = t as i32 + 1;
        for i in 0..2 {
            m[i] = 0.9 * m[i] + 0.1 * g[i];
            v[i] = 0.999 * v[i] + 0.001 * g[i] * g[i];
            let mh = m[i] / (1.0 - 0.9f64.powi(t));
            let vh = v[i] / (1.0 - 0.999f64.powi(t));
            w[i] -= 0.1 * mh / (vh.sqrt() + 1e-8);
        }
        let gm: IndexMap<String, Tensor<f32>> =
            [("w.weight".to_string(), Tensor::new(&[2], vec![g[0] as f32, g[1] as f32]).unwrap())].into();
        adam.update(&mut params, &gm, t as u64).unwrap();
        let got = params.get("w.weight").unwrap().data();
        for i in 0..2 {
            assert!((got[i] as f64 - w[i]).abs() < 1e-6, "t={t} i={i}: {} vs {}", got[i], w[i]);
        }
    }
    // The first step moves each weight by about lr.
    assert_eq!(adam.t, 3);
}

#[test]
fn runs_are_deterministic_resumable_and_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(dir.path(), arsr());
    let cfg = micro(arsr());
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    let first = train(cfg.clone(), &data, &a).unwrap();
    assert!(first.seconds < 300.0, "smoke run took {}s", first.seconds);
    let second = train(cfg.clone(), &data, &b).unwrap();

    assert_eq!(first.history.len(), 100);
    assert!(same_bytes(&a.join(LOG_FILE), &b.join(LOG_FILE)));
    assert!(same_bytes(&a.join(FINAL_CHECKPOINT), &b.join(FINAL_CHECKPOINT)));
    assert_eq!(first.state, second.state);

    let resumed = resume(&a.join("step_000050.ckpt"), cfg.clone(), &data, &c).unwrap();
    assert!(same_bytes(&a.join(LOG_FILE), &c.join(LOG_FILE)));
    assert!(same_bytes(&a.join(FINAL_CHECKPOINT), &c.join(FINAL_CHECKPOINT)));
    assert_eq!(resumed.state, first.state);

    let loaded = TrainState::load(&a.join(FINAL_CHECKPOINT)).unwrap();
    assert_eq!(loaded, first.state);

    let rows = read_log(&a.join(LOG_FILE)).unwrap();
    assert_eq!(rows, first.history);
    for row in &rows {
        assert!(row.decomposition_error() <= 1e-6, "step {}: {}", row.step, row.decomposition_error());
        assert_eq!(row.r, 0.4);
    }
    let replayed = replay_k(&rows, cfg.k_state());
    assert_eq!(replayed.len(), rows.len());
    for (row, k) in rows.iter().zip(&replayed) {
        assert_eq!(row.k.to_bits(), k.to_bits(), "step {}", row.step);
    }
}

#[test]
fn checkpoint_guards() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(dir.path(), arsr());
    let cfg = TrainConfig { iterations: 3, checkpoint_every: 0, ..micro(arsr()) };
    let out = dir.path().join("run");
    train(cfg.clone(), &data, &out).unwrap();
    let ckpt = out.join(FINAL_CHECKPOINT);

    let other = TrainConfig { r: 0.5, ..cfg.clone() };
    assert!(matches!(TrainState::resume_from(&ckpt, other), Err(CoreError::ConfigMismatch { .. })));
    let longer = TrainConfig { iterations: 10, ..cfg };
    assert_eq!(TrainState::resume_from(&ckpt, longer).unwrap().step, 3);

    let mut bytes = std::fs::read(&ckpt).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0x40;
    let bad = dir.path().join("bad.ckpt");
    std::fs::write(&bad, &bytes).unwrap();
    assert!(matches!(TrainState::load(&bad), Err(CoreError::Format { .. })));
}

#[test]
fn alternation_leaves_the_other_network_untouched() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(dir.path(), arsr());
    let mut state = TrainState::new(micro(arsr())).unwrap();
    state.audit = true;
    for step in 1..=5 {
        let batch = data.next_batch(2, 7, step).unwrap();
        let row = state.train_step(&batch).unwrap();
        assert!(row.is_finite());
    }
    assert_eq!(state.step, 5);
    assert_eq!((state.adam_g.t, state.adam_d.t), (5, 5));
}

#[test]
fn binary_discriminator_and_strict_mode_train() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(dir.path(), arsr());
    let cfg = TrainConfig { disc_kind: DiscKind::Dv2, iterations: 10, checkpoint_every: 0, ..micro(arsr()) };
    let run = train(cfg, &data, &dir.path().join("dv2")).unwrap();
    assert!(run.history.iter().all(|r| r.is_finite()));

    let ar = DegradeSpec::new(Task::Ar, 10, 1, 16).unwrap();
    let data = dataset(&dir.path().join("ar"), ar);
    let strict = TrainConfig { recon_mode: ReconMode::StrictLiteral, iterations: 10, checkpoint_every: 0, ..micro(ar) };
    let run = train(strict, &data, &dir.path().join("strict")).unwrap();
    assert!(run.history.iter().all(|r| r.is_finite() && r.decomposition_error() <= 1e-6));

    let wrong = TrainConfig { recon_mode: ReconMode::StrictLiteral, ..micro(arsr()) };
    assert!(wrong.validate().is_err());
}

#[test]
fn non_canny_kinds_drop_the_edge_term() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(dir.path(), arsr());
    let cfg = TrainConfig { loss_kind: LossKind::L1, iterations: 3, checkpoint_every: 0, ..micro(arsr()) };
    let run = train(cfg, &data, &dir.path().join("l1")).unwrap();
    for row in &run.history {
        assert_eq!(row.r, 0.0);
        assert!(row.edge > 0.0);
        assert!(row.decomposition_error() <= 1e-6);
    }
}

#[test]
fn non_finite_weights_abort_with_the_step() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(dir.path(), arsr());
    let mut state = TrainState::new(micro(arsr())).unwrap();
    state.step = 41;
    state.generator.params.get_mut("head.bias").unwrap().data_mut()[0] = f32::NAN;
    let batch = data.next_batch(2, 7, 42).unwrap();
    match state.train_step(&batch) {
        Err(CoreError::NonFinite { step, .. }) => assert_eq!(step, 42),
        other => panic!("expected a non-finite abort, got {other:?}"),
    }
}

#[test]
fn task_mismatch_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(dir.path(), arsr());
    let cfg = micro(DegradeSpec::new(Task::Sr, 10, 2, 16).unwrap());
    assert!(train(cfg, &data, &dir.path().join("x")).unwrap_err().is_contract());
}

#[test]
fn controller_starts_from_zero() {
    assert_eq!(micro(arsr()).k_state(), KState::default());
}
