use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use super::{TrainConfig, TrainState};
use crate::data::Dataset;
use crate::losses::{parse_log, update_k, KState, LossBreakdown, LOG_HEADER};
use crate::{CoreError, Result};

pub const LOG_FILE: &str = "loss_log.csv";
pub const FINAL_CHECKPOINT: &str = "final.ckpt";

#[derive(Debug)]
pub struct RunSummary {
    pub log_path: PathBuf,
    pub final_checkpoint: PathBuf,
    /// Periodic checkpoints written by this invocation.
    pub checkpoints: Vec<PathBuf>,
    /// Every logged row, including rows kept from before a resume.
    pub history: Vec<LossBreakdown>,
    pub state: TrainState,
    pub seconds: f64,
}

pub fn checkpoint_name(step: u64) -> String {
    format!("step_{step:06}.ckpt")
}

/// Fresh run of `config.iterations` steps.
pub fn train(config: TrainConfig, dataset: &Dataset, out_dir: &Path) -> Result<RunSummary> {
    let state = TrainState::new(config)?;
    run(state, dataset, out_dir, Vec::new())
}

/// Continues from `checkpoint` up to `config.iterations`. Earlier log rows
/// come from `out_dir`, or from the checkpoint's directory when `out_dir` has
/// no log; rows after the checkpoint step are discarded and regenerated.
pub fn resume(checkpoint: &Path, config: TrainConfig, dataset: &Dataset, out_dir: &Path) -> Result<RunSummary> {
    let state = TrainState::resume_from(checkpoint, config)?;
    let source = std::iter::once(out_dir.join(LOG_FILE))
        .chain(checkpoint.parent().map(|d| d.join(LOG_FILE)))
        .find(|p| p.is_file());
    let history = match source {
        Some(log) => read_log(&log)?.into_iter().filter(|r| r.step <= state.step).collect(),
        None => Vec::new(),
    };
    run(state, dataset, out_dir, history)
}

pub fn read_log(path: &Path) -> Result<Vec<LossBreakdown>> {
    parse_log(&fs::read_to_string(path).map_err(|e| CoreError::io(path, e))?)
}

/// Controller trajectory obtained by feeding the logged losses back through
/// the update rule, starting from `start`.
pub fn replay_k(rows: &[LossBreakdown], start: KState) -> Vec<f64> {
    let mut s = start;
    rows.iter()
        .map(|r| {
            s = update_k(s, r.l_real, r.l_fake);
            s.k
        })
        .collect()
}

fn run(mut state: TrainState, dataset: &Dataset, out_dir: &Path, mut history: Vec<LossBreakdown>) -> Result<RunSummary> {
    if dataset.spec != state.config.task {
        return Err(CoreError::contract(
            "train",
            format!("dataset was built for {:?}, config trains {:?}", dataset.spec, state.config.task),
        ));
    }
    fs::create_dir_all(out_dir).map_err(|e| CoreError::io(out_dir, e))?;
    let log_path = out_dir.join(LOG_FILE);
    let io = |e| CoreError::io(&log_path, e);
    let mut log = BufWriter::new(File::create(&log_path).map_err(io)?);
    writeln!(log, "{LOG_HEADER}").map_err(io)?;
    for row in &history {
        writeln!(log, "{}", row.to_csv()).map_err(io)?;
    }
    log.flush().map_err(io)?;

    let started = Instant::now();
    let cfg = state.config.clone();
    let mut checkpoints = Vec::new();
    while state.step < cfg.iterations {
        let batch = dataset.next_batch(cfg.batch_size, cfg.seed, state.step + 1)?;
        let row = match state.train_step(&batch) {
            Ok(row) => row,
            Err(e) => {
                log.flush().map_err(io)?;
                return Err(e);
            }
        };
        writeln!(log, "{}", row.to_csv()).map_err(io)?;
        history.push(row);
        if row.step % 100 == 0 {
            log::info!("step {} f_loss {:.5} k {:.5}", row.step, row.f_loss, row.k);
        }
        if cfg.checkpoint_every > 0 && state.step % cfg.checkpoint_every == 0 {
            log.flush().map_err(io)?;
            let p = out_dir.join(checkpoint_name(state.step));
            state.save(&p)?;
            checkpoints.push(p);
        }
    }
    log.flush().map_err(io)?;
    let final_checkpoint = out_dir.join(FINAL_CHECKPOINT);
    state.save(&final_checkpoint)?;
    Ok(RunSummary {
        log_path,
        final_checkpoint,
        checkpoints,
        history,
        state,
        seconds: started.elapsed().as_secs_f64(),
    })
}
