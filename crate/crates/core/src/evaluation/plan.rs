use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum TrainMode {
    /// Fixed-length training window that advances with the validation window.
    #[default]
    SlidingTrain,
    /// Training always starts at index 0.
    ExpandingTrain,
}

impl TrainMode {
    pub fn as_str(self) -> &'static str {
        match self {
            TrainMode::SlidingTrain => "sliding",
            TrainMode::ExpandingTrain => "expanding",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSpec {
    pub fold_id: usize,
    pub train_range: Range<usize>,
    pub val_range: Range<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkForwardPlan {
    pub folds: Vec<FoldSpec>,
    pub init_train: usize,
    pub val_len: usize,
    pub step: usize,
    pub mode: TrainMode,
}

/// Folds with validation starts at `init_train + k·step`, generated while the
/// whole validation window fits inside `n`.
pub fn plan_walk_forward(
    n: usize,
    init_train: usize,
    val_len: usize,
    step: usize,
    mode: TrainMode,
) -> Result<WalkForwardPlan> {
    if init_train == 0 || val_len == 0 || step == 0 {
        return Err(Error::InvalidArgument("init_train, val_len and step must be positive".into()));
    }
    if n < init_train + val_len {
        return Err(Error::SeriesTooShort { needed: init_train + val_len, got: n });
    }
    let mut folds = Vec::new();
    let mut val_start = init_train;
    while val_start + val_len <= n {
        let train_start = match mode {
            TrainMode::SlidingTrain => val_start - init_train,
            TrainMode::ExpandingTrain => 0,
        };
        folds.push(FoldSpec {
            fold_id: folds.len(),
            train_range: train_start..val_start,
            val_range: val_start..val_start + val_len,
        });
        val_start += step;
    }
    Ok(WalkForwardPlan { folds, init_train, val_len, step, mode })
}
