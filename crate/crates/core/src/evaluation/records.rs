use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::metrics::{mae, mase, mse};
use crate::market_data::Scaler;
use crate::regime::RegimeLabel;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    Linear,
    Lstm,
    Moe,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Linear, ModelKind::Lstm, ModelKind::Moe];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Linear => "linear",
            ModelKind::Lstm => "lstm",
            ModelKind::Moe => "moe",
        }
    }

    /// Row label used in the regime tables.
    pub fn table_label(self) -> &'static str {
        match self {
            ModelKind::Linear => "Linear Regression",
            ModelKind::Lstm => "LSTM (RNN)",
            ModelKind::Moe => "Mixture of Experts",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RecordSource {
    WalkForward,
    Holdout,
}

impl RecordSource {
    pub fn as_str(self) -> &'static str {
        match self {
            RecordSource::WalkForward => "walk_forward",
            RecordSource::Holdout => "holdout",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HorizonSpec {
    pub horizons: Vec<usize>,
}

impl Default for HorizonSpec {
    fn default() -> Self {
        Self { horizons: vec![5, 20, 60] }
    }
}

impl HorizonSpec {
    pub fn new(mut horizons: Vec<usize>) -> Result<Self> {
        if horizons.contains(&0) {
            return Err(Error::InvalidArgument("horizons must be >= 1".into()));
        }
        horizons.sort_unstable();
        horizons.dedup();
        Ok(Self { horizons })
    }

    pub fn max(&self) -> usize {
        self.horizons.iter().copied().max().unwrap_or(1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HoldoutSpec {
    pub volatile_holdout: Vec<String>,
    pub stable_holdout: Vec<String>,
}

impl HoldoutSpec {
    pub fn is_empty(&self) -> bool {
        self.volatile_holdout.is_empty() && self.stable_holdout.is_empty()
    }

    pub fn contains(&self, ticker: &str) -> bool {
        self.volatile_holdout.iter().chain(&self.stable_holdout).any(|t| t == ticker)
    }

    /// Holdout tickers with the regime their stress set stands for.
    pub fn labeled(&self) -> Vec<(String, RegimeLabel)> {
        self.volatile_holdout
            .iter()
            .map(|t| (t.clone(), RegimeLabel::Volatile))
            .chain(self.stable_holdout.iter().map(|t| (t.clone(), RegimeLabel::Stable)))
            .collect()
    }
}

/// Errors of one model on one (firm, fold, horizon). `mse`, `mae`, `rmse` and
/// `mase` are in standardized units; the `raw_*` fields are in source units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub source: RecordSource,
    pub ticker: String,
    pub fold_id: usize,
    pub regime: RegimeLabel,
    pub horizon: usize,
    pub model: ModelKind,
    pub n: usize,
    pub mse: f64,
    pub mae: f64,
    pub rmse: f64,
    pub mase: Option<f64>,
    pub raw_mse: f64,
    pub raw_mae: f64,
    pub raw_rmse: f64,
}

/// Identifies the firm, fold and forecasting setup a record belongs to.
#[derive(Debug, Clone)]
pub struct RecordTag<'a> {
    pub source: RecordSource,
    pub ticker: &'a str,
    pub fold_id: usize,
    pub regime: RegimeLabel,
    pub horizon: usize,
}

impl MetricRecord {
    /// Scores standardized `preds` against `targets`; `train_targets` supply the MASE scale.
    pub fn score(
        tag: &RecordTag<'_>,
        model: ModelKind,
        preds: &[f64],
        targets: &[f64],
        train_targets: &[f64],
        scaler: &Scaler,
    ) -> Result<Self> {
        let mse_v = mse(preds, targets)?;
        let mae_v = mae(preds, targets)?;
        let raw_p: Vec<f64> = preds.iter().map(|&p| scaler.invert(p)).collect();
        let raw_y: Vec<f64> = targets.iter().map(|&y| scaler.invert(y)).collect();
        let raw_mse = mse(&raw_p, &raw_y)?;
        Ok(Self {
            source: tag.source,
            ticker: tag.ticker.to_string(),
            fold_id: tag.fold_id,
            regime: tag.regime,
            horizon: tag.horizon,
            model,
            n: preds.len(),
            mse: mse_v,
            mae: mae_v,
            rmse: mse_v.sqrt(),
            mase: mase(preds, targets, train_targets).ok(),
            raw_mse,
            raw_mae: mae(&raw_p, &raw_y)?,
            raw_rmse: raw_mse.sqrt(),
        })
    }

    /// Canonical ordering key for reproducible output.
    pub fn sort_key(&self) -> (RecordSource, usize, &str, usize, ModelKind) {
        (self.source, self.fold_id, self.ticker.as_str(), self.horizon, self.model)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellKey {
    pub regime: RegimeLabel,
    pub model: ModelKind,
    pub horizon: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single observation.
    pub std: f64,
    pub count: usize,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let std =
            if n < 2 { 0.0 } else { (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt() };
        Some(Self { mean, std, count: n })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub count: usize,
    pub mse: Summary,
    pub mae: Summary,
    pub rmse: Summary,
    /// Over the records that have a MASE value.
    pub mase: Option<Summary>,
    pub raw_mse: Summary,
    pub raw_mae: Summary,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StratifiedReport {
    pub cells: BTreeMap<CellKey, CellStats>,
}

impl StratifiedReport {
    pub fn get(&self, regime: RegimeLabel, model: ModelKind, horizon: usize) -> Option<&CellStats> {
        self.cells.get(&CellKey { regime, model, horizon })
    }
}

/// Mean and sample standard deviation of each metric per (regime, model, horizon).
pub fn aggregate_stratified<'a>(records: impl IntoIterator<Item = &'a MetricRecord>) -> StratifiedReport {
    let mut groups: BTreeMap<CellKey, Vec<&MetricRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(CellKey { regime: r.regime, model: r.model, horizon: r.horizon }).or_default().push(r);
    }
    let cells = groups
        .into_iter()
        .map(|(key, rs)| {
            let col = |f: fn(&MetricRecord) -> f64| {
                Summary::of(&rs.iter().map(|r| f(r)).collect::<Vec<_>>()).expect("non-empty group")
            };
            let mases: Vec<f64> = rs.iter().filter_map(|r| r.mase).collect();
            let stats = CellStats {
                count: rs.len(),
                mse: col(|r| r.mse),
                mae: col(|r| r.mae),
                rmse: col(|r| r.rmse),
                mase: Summary::of(&mases),
                raw_mse: col(|r| r.raw_mse),
                raw_mae: col(|r| r.raw_mae),
            };
            (key, stats)
        })
        .collect();
    StratifiedReport { cells }
}
