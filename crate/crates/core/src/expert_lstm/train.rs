use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{adam_step, backward_bptt, forward_sequence, init_params, predict_lstm, AdamState, LstmParams, Tape};
use crate::market_data::WindowSample;
use crate::seed::mix;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without a validation-MAE improvement before stopping.
    pub patience: usize,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub seed: u64,
    /// Global gradient L2-norm ceiling; `None` disables clipping.
    pub clip_norm: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            batch_size: 16,
            max_epochs: 50,
            patience: 5,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            seed: 0,
            clip_norm: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(format!("train config: {what}")));
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if self.batch_size == 0 || self.max_epochs == 0 || self.patience == 0 {
            return bad("batch_size, max_epochs and patience must be positive");
        }
        if self.patience > self.max_epochs {
            return bad("patience must not exceed max_epochs");
        }
        if !(0.0..1.0).contains(&self.adam_beta1)
            || !(0.0..1.0).contains(&self.adam_beta2)
            || self.adam_beta1 <= 0.0
            || self.adam_beta2 <= 0.0
        {
            return bad("Adam betas must lie in (0, 1)");
        }
        if !(self.adam_eps > 0.0) {
            return bad("adam_eps must be positive");
        }
        if let Some(c) = self.clip_norm {
            if !(c > 0.0) {
                return bad("clip_norm must be positive when set");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub train_mse: f64,
    pub val_mae: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub train_mse: f64,
    pub val_mae: f64,
    pub best_val_mae: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingHistory {
    /// Training MSE of the initial parameters, before any update.
    pub initial_train_mse: f64,
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub stopped_early: bool,
}

/// Generic early-stopping driver.
///
/// Calls `run_epoch(params, epoch)` for epochs `1..=max_epochs`, keeps a copy of
/// the parameters from the epoch with the lowest validation MAE, and stops once
/// `patience` consecutive epochs fail to improve on it. Returns the best
/// parameters, the per-epoch records, the best epoch and whether it stopped early.
pub fn run_early_stopping<P: Clone>(
    max_epochs: usize,
    patience: usize,
    mut params: P,
    mut run_epoch: impl FnMut(&mut P, usize) -> Result<EpochStats>,
) -> Result<(P, Vec<EpochRecord>, usize, bool)> {
    let mut best: Option<(P, f64, usize)> = None;
    let mut since_best = 0;
    let mut records = Vec::new();
    for epoch in 1..=max_epochs {
        let stats = run_epoch(&mut params, epoch)?;
        let improved = match &best {
            None => !stats.val_mae.is_nan(),
            Some((_, b, _)) => stats.val_mae < *b,
        };
        if improved || best.is_none() {
            best = Some((params.clone(), stats.val_mae, epoch));
            since_best = 0;
        } else {
            since_best += 1;
        }
        let best_val_mae = best.as_ref().map_or(f64::NAN, |b| b.1);
        records.push(EpochRecord { epoch, train_mse: stats.train_mse, val_mae: stats.val_mae, best_val_mae });
        if since_best >= patience {
            let (p, _, e) = best.expect("at least one epoch ran");
            return Ok((p, records, e, epoch < max_epochs));
        }
    }
    let (p, _, e) = best.ok_or(Error::InvalidArgument("max_epochs must be positive".into()))?;
    Ok((p, records, e, false))
}

fn mean_squared_error(params: &LstmParams, samples: &[WindowSample]) -> Result<f64> {
    let mut sum = 0.0;
    for s in samples {
        sum += (predict_lstm(params, &s.inputs)? - s.target).powi(2);
    }
    Ok(sum / samples.len() as f64)
}

fn mean_absolute_error(params: &LstmParams, samples: &[WindowSample]) -> Result<f64> {
    let mut sum = 0.0;
    for s in samples {
        sum += (predict_lstm(params, &s.inputs)? - s.target).abs();
    }
    Ok(sum / samples.len() as f64)
}

/// Trains a fresh network on `train`, early-stopping on MAE over `val`.
///
/// Each epoch visits `train` in an order shuffled by `(cfg.seed, epoch)` in
/// mini-batches of `cfg.batch_size`; the final partial batch is kept.
pub fn train_early_stopping(
    train: &[WindowSample],
    val: &[WindowSample],
    hidden: usize,
    cfg: &TrainConfig,
) -> Result<(LstmParams, TrainingHistory)> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::Empty("training split"));
    }
    if val.is_empty() {
        return Err(Error::Empty("validation split"));
    }
    let params = init_params(hidden, 1, cfg.seed)?;
    let initial_train_mse = mean_squared_error(&params, train)?;
    let mut adam = AdamState::new(&params);
    let mut order: Vec<usize> = (0..train.len()).collect();

    let (best, epochs, best_epoch, stopped_early) =
        run_early_stopping(cfg.max_epochs, cfg.patience, params, |params, epoch| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix(cfg.seed, epoch as u64));
            order.sort_unstable();
            order.shuffle(&mut rng);
            for chunk in order.chunks(cfg.batch_size) {
                let batch: Vec<WindowSample> = chunk.iter().map(|&k| train[k].clone()).collect();
                let tapes = batch
                    .iter()
                    .map(|s| forward_sequence(params, &s.inputs).map(|(_, t)| t))
                    .collect::<Result<Vec<Tape>>>()?;
                let mut grads = backward_bptt(params, &batch, &tapes)?;
                if let Some(ceiling) = cfg.clip_norm {
                    let norm = grads.l2_norm();
                    if norm > ceiling {
                        grads.scale(ceiling / norm);
                    }
                }
                adam_step(params, &grads, &mut adam, cfg)?;
            }
            Ok(EpochStats { train_mse: mean_squared_error(params, train)?, val_mae: mean_absolute_error(params, val)? })
        })?;

    Ok((best, TrainingHistory { initial_train_mse, epochs, best_epoch, stopped_early }))
}
