//! Training loop: Adam over the trainable parameters, early stopping on the
//! validation total, divergence detection, and a JSONL-friendly epoch log.

use crate::error::{CoreError, Result};
use crate::graph::Graph;
use crate::loss::{BreakdownAccumulator, LossBreakdown};
use crate::model::{EibModel, TrainRecord};
use crate::params::Adam;
use crate::seed::derive_seed;
use crate::{sc, Scalar};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

fn default_lr() -> f64 {
    5e-5
}
fn default_batch() -> usize {
    32
}
fn default_epochs() -> usize {
    20
}
fn default_patience() -> usize {
    3
}
fn default_beta() -> f64 {
    1e-4
}
fn default_mc() -> usize {
    5
}
fn default_seed() -> u64 {
    42
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default = "default_epochs")]
    pub max_epochs: usize,
    /// Stop after this many epochs without validation improvement.
    #[serde(default = "default_patience")]
    pub early_stop_patience: usize,
    /// Compression weight; larger means stronger compression pressure.
    #[serde(default = "default_beta")]
    pub beta: f64,
    /// Monte-Carlo samples per record for the bottleneck expectation.
    #[serde(default = "default_mc")]
    pub mc_samples: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: default_lr(),
            batch_size: default_batch(),
            max_epochs: default_epochs(),
            early_stop_patience: default_patience(),
            beta: default_beta(),
            mc_samples: default_mc(),
            seed: default_seed(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.learning_rate <= 0.0 || !self.learning_rate.is_finite() {
            return Err(CoreError::Config("learning_rate must be positive".into()));
        }
        if self.batch_size == 0 || self.max_epochs == 0 || self.mc_samples == 0 {
            return Err(CoreError::Config(
                "batch_size, max_epochs and mc_samples must be positive".into(),
            ));
        }
        if self.beta < 0.0 || !self.beta.is_finite() {
            return Err(CoreError::Config("beta must be non-negative".into()));
        }
        Ok(())
    }
}

/// One line of the training log: the averaged breakdown for a split.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub split: String,
    #[serde(flatten)]
    pub losses: LossBreakdown,
}

#[derive(Debug)]
pub struct TrainOutcome {
    pub log: Vec<EpochLog>,
    pub best_epoch: usize,
    pub best_validation: LossBreakdown,
    pub epochs_run: usize,
    pub stopped_early: bool,
}

/// Trains the model in place. On success the model holds the best-validation
/// parameters. On divergence (non-finite loss) the model is restored to the
/// last good epoch and an error is returned, so the caller can still save a
/// usable checkpoint.
///
/// Fully deterministic for a given `(model, records, config)`: batch order,
/// Monte-Carlo noise and validation seeds all derive from `config.seed`.
pub fn train<F: Scalar>(
    model: &mut EibModel<F>,
    train_records: &[TrainRecord],
    valid_records: &[TrainRecord],
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochLog),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train_records.is_empty() {
        return Err(CoreError::Config("no training records".into()));
    }
    if valid_records.is_empty() {
        return Err(CoreError::Config("no validation records".into()));
    }

    let mut opt = Adam::new(cfg.learning_rate);
    let mut log = Vec::new();
    let mut best = model.params.snapshot();
    let mut best_epoch = 0usize;
    let mut best_valid = evaluate_split(model, valid_records, cfg);
    let mut since_best = 0usize;
    let mut stopped_early = false;
    let mut epochs_run = 0usize;

    for epoch in 1..=cfg.max_epochs {
        let mut order: Vec<usize> = (0..train_records.len()).collect();
        order.shuffle(&mut crate::seed::stream_rng(cfg.seed, "epoch-shuffle", epoch as u64));

        let mut epoch_acc = BreakdownAccumulator::new(cfg.beta);
        for chunk in order.chunks(cfg.batch_size) {
            model.params.zero_grads();
            let batch_inv = sc::<F>(1.0 / chunk.len() as f64);
            let mut batch_finite = true;
            for &idx in chunk {
                let record = &train_records[idx];
                let mc_seed = derive_seed(cfg.seed, "train-mc", (epoch * train_records.len() + idx) as u64);
                let mut g = Graph::new();
                let vars = model.record_loss_graph(&mut g, record, cfg, mc_seed);
                epoch_acc.add(&g, &vars);
                if !g.value(vars.total).item().is_finite() {
                    batch_finite = false;
                    break;
                }
                let grads = g.backward(vars.total, batch_inv);
                g.scatter_grads(&grads, &mut model.params, F::one());
            }
            if !batch_finite || !model.params.all_finite() {
                model.params.restore(&best);
                return Err(CoreError::Diverged {
                    epoch,
                    detail: "non-finite loss or parameters".into(),
                    last_good_epoch: best_epoch,
                });
            }
            opt.step(&mut model.params);
        }
        epochs_run = epoch;

        let train_line = EpochLog {
            epoch,
            split: "train".into(),
            losses: epoch_acc.finish(),
        };
        if !train_line.losses.is_finite() {
            model.params.restore(&best);
            return Err(CoreError::Diverged {
                epoch,
                detail: "non-finite epoch average".into(),
                last_good_epoch: best_epoch,
            });
        }
        on_epoch(&train_line);
        log.push(train_line);

        let valid = evaluate_split(model, valid_records, cfg);
        let valid_line = EpochLog {
            epoch,
            split: "valid".into(),
            losses: valid,
        };
        on_epoch(&valid_line);
        log.push(valid_line);

        if valid.total < best_valid.total {
            best_valid = valid;
            best = model.params.snapshot();
            best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.early_stop_patience {
                stopped_early = true;
                break;
            }
        }
    }

    model.params.restore(&best);
    Ok(TrainOutcome {
        log,
        best_epoch,
        best_validation: best_valid,
        epochs_run,
        stopped_early,
    })
}

/// Gradient-free breakdown over a split with per-record seeds that do not
/// depend on the epoch, so values are comparable across epochs.
pub fn evaluate_split<F: Scalar>(
    model: &EibModel<F>,
    records: &[TrainRecord],
    cfg: &TrainConfig,
) -> LossBreakdown {
    let mut acc = BreakdownAccumulator::new(cfg.beta);
    for (i, record) in records.iter().enumerate() {
        let mut g = Graph::new();
        let vars = model.record_loss_graph(&mut g, record, cfg, derive_seed(cfg.seed, "valid-mc", i as u64));
        acc.add(&g, &vars);
    }
    acc.finish()
}
