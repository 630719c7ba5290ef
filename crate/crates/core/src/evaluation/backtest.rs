use std::collections::{BTreeMap, BTreeSet};
use std::ops::Range;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::forecast::{moe_recursive_forecast, StepContext};
use super::plan::{plan_walk_forward, FoldSpec, TrainMode, WalkForwardPlan};
use super::records::{HoldoutSpec, HorizonSpec, MetricRecord, ModelKind, RecordSource, RecordTag};
use crate::expert_linear::{fit_ols, predict_linear, LinearParams};
use crate::expert_lstm::{predict_lstm, train_early_stopping, LstmParams, TrainConfig, TrainingHistory};
use crate::market_data::{
    fit_scaler, log_returns, rolling_volatility, simple_returns, DataMode, PriceSeries, Scaler, VolatilitySeries,
    WindowSample,
};
use crate::moe::{GateTable, MoePrediction};
use crate::regime::{assign_regimes, rank_by_volatility, RegimeAssignment, RegimeLabel, RegimePolicy};
use crate::seed::task_seed;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestConfig {
    pub mode: DataMode,
    pub window: usize,
    pub policy: RegimePolicy,
    pub init_train: usize,
    pub val_len: usize,
    pub step: usize,
    pub train_mode: TrainMode,
    pub hidden: usize,
    pub train: TrainConfig,
    /// Trailing share of each training window held out for early stopping.
    pub es_fraction: f64,
    pub gates: GateTable,
    pub horizons: HorizonSpec,
    pub holdout_k: usize,
    pub seed: u64,
}

impl Default for BacktestConfig {
    fn default() -> Self {
        Self {
            mode: DataMode::PriceLevels,
            window: 10,
            policy: RegimePolicy::median(),
            init_train: 80,
            val_len: 20,
            step: 20,
            train_mode: TrainMode::SlidingTrain,
            hidden: 50,
            train: TrainConfig::default(),
            es_fraction: 0.2,
            gates: GateTable::default(),
            horizons: HorizonSpec::default(),
            holdout_k: 10,
            seed: 42,
        }
    }
}

impl BacktestConfig {
    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        self.policy.validate()?;
        if self.window == 0 || self.hidden == 0 {
            return Err(Error::InvalidArgument("window and hidden size must be positive".into()));
        }
        if !(self.es_fraction > 0.0 && self.es_fraction < 1.0) {
            return Err(Error::InvalidArgument(format!("es_fraction must lie in (0, 1), got {}", self.es_fraction)));
        }
        if self.init_train < self.window + 2 {
            return Err(Error::InvalidArgument(format!(
                "init_train {} leaves fewer than two training windows of length {}",
                self.init_train, self.window
            )));
        }
        Ok(())
    }

    fn task_train_config(&self, ticker: &str, fold: usize) -> TrainConfig {
        TrainConfig { seed: task_seed(self.seed, ticker, fold), ..self.train.clone() }
    }
}

/// One firm's modelled series with the regime volatility aligned to it.
#[derive(Debug, Clone)]
pub struct FirmData {
    pub ticker: String,
    /// Prices or log-returns, depending on the data mode.
    pub values: Vec<f64>,
    /// Date of each entry of `values`.
    pub dates: Vec<NaiveDate>,
    pub vol: VolatilitySeries,
    /// Price index of `values[0]`.
    offset: usize,
}

impl FirmData {
    /// Rolling volatility known at the close of `values[idx]`.
    pub fn sigma_at(&self, idx: usize) -> Option<f64> {
        self.vol.at_price_index(idx + self.offset)
    }

    fn sigma_required(&self, idx: usize) -> Result<f64> {
        self.sigma_at(idx).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "{}: no {}-day volatility available at index {idx}",
                self.ticker, self.vol.window
            ))
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Builds the modelled series and the policy's volatility series. Threshold
/// classification reads simple-return volatility, median classification reads
/// log-return volatility.
pub fn prepare_firm(series: &PriceSeries, mode: DataMode, policy: &RegimePolicy) -> Result<FirmData> {
    let returns = match policy {
        RegimePolicy::Threshold { .. } => simple_returns(series)?,
        RegimePolicy::CrossSectionalMedian { .. } => log_returns(series)?,
    };
    let vol = rolling_volatility(&returns, policy.vol_window())?;
    let dates = series.dates();
    let (values, dates, offset) = match mode {
        DataMode::PriceLevels => (series.prices(), dates, 0),
        DataMode::LogReturns => (log_returns(series)?.values, dates[1..].to_vec(), 1),
    };
    Ok(FirmData { ticker: series.ticker.clone(), values, dates, vol, offset })
}

/// Where and with what a recursive forecast was launched.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastLaunch {
    /// Standardized observations preceding `t`.
    pub window: Vec<f64>,
    pub t: usize,
    pub sigma: f64,
    pub regime: RegimeLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedFold {
    pub ticker: String,
    pub fold_id: usize,
    pub regime: RegimeLabel,
    pub scaler: Scaler,
    pub lstm: LstmParams,
    pub linear: LinearParams,
    pub history: TrainingHistory,
    pub launch: ForecastLaunch,
}

/// One-step validation prediction of one model, in source units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub ticker: String,
    pub fold_id: usize,
    pub t_index: usize,
    pub date: NaiveDate,
    pub model: ModelKind,
    pub actual: f64,
    pub predicted: f64,
}

#[derive(Debug, Clone, Default)]
pub struct WalkForwardOutput {
    pub assignments: Vec<RegimeAssignment>,
    pub records: Vec<MetricRecord>,
    pub predictions: Vec<PredictionRow>,
    pub fitted: Vec<FittedFold>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PooledModels {
    pub lstm: LstmParams,
    pub linear: LinearParams,
    pub history: TrainingHistory,
    /// First index of the final test segment.
    pub test_start: usize,
}

#[derive(Debug, Clone)]
pub struct BacktestOutput {
    pub plan: WalkForwardPlan,
    pub holdout: HoldoutSpec,
    pub walk_forward: WalkForwardOutput,
    pub holdout_records: Vec<MetricRecord>,
    pub pooled: Option<PooledModels>,
}

impl BacktestOutput {
    /// Walk-forward and holdout records in canonical order.
    pub fn all_records(&self) -> Vec<MetricRecord> {
        let mut all: Vec<MetricRecord> =
            self.walk_forward.records.iter().chain(&self.holdout_records).cloned().collect();
        all.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
        all
    }
}

/// Standardized supervised windows whose targets fall in `targets`.
fn windows_for(z: &[f64], w: usize, targets: Range<usize>) -> Vec<WindowSample> {
    targets
        .filter(|&t| t >= w)
        .map(|t| WindowSample { inputs: z[t - w..t].to_vec(), target: z[t], t_index: t })
        .collect()
}

/// Splits training windows into a fitting part and a trailing early-stopping part.
fn split_early_stopping(samples: Vec<WindowSample>, fraction: f64) -> Result<(Vec<WindowSample>, Vec<WindowSample>)> {
    if samples.len() < 2 {
        return Err(Error::SeriesTooShort { needed: 2, got: samples.len() });
    }
    let es = ((samples.len() as f64 * fraction).ceil() as usize).clamp(1, samples.len() - 1);
    let mut fit = samples;
    let stop = fit.split_off(fit.len() - es);
    Ok((fit, stop))
}

/// Regression rows `(t, σ known at t−1, z[t])` for targets in `targets`.
fn linear_rows(firm: &FirmData, z: &[f64], targets: Range<usize>) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut rows = (Vec::new(), Vec::new(), Vec::new());
    for t in targets.filter(|&t| t >= 1) {
        if let Some(s) = firm.sigma_at(t - 1) {
            rows.0.push(t as f64);
            rows.1.push(s);
            rows.2.push(z[t]);
        }
    }
    rows
}

struct FoldResult {
    records: Vec<MetricRecord>,
    predictions: Vec<PredictionRow>,
    fitted: FittedFold,
}

fn score_models(
    tag: &RecordTag<'_>,
    paths: &[(ModelKind, Vec<f64>)],
    targets: &[f64],
    train_targets: &[f64],
    scaler: &Scaler,
) -> Result<Vec<MetricRecord>> {
    paths
        .iter()
        .map(|(model, preds)| MetricRecord::score(tag, *model, &preds[..targets.len()], targets, train_targets, scaler))
        .collect()
}

fn recursive_paths(
    lstm: &LstmParams,
    linear: &LinearParams,
    gates: &GateTable,
    launch: &ForecastLaunch,
    h: usize,
) -> Result<Vec<(ModelKind, Vec<f64>)>> {
    let ctx = StepContext { t: launch.t as f64, sigma: launch.sigma, regime: launch.regime };
    let moe: Vec<MoePrediction> = moe_recursive_forecast(lstm, linear, gates, &launch.window, &ctx, h)?;
    Ok(vec![
        (ModelKind::Linear, moe.iter().map(|p| p.lm_component).collect()),
        (ModelKind::Lstm, moe.iter().map(|p| p.rnn_component).collect()),
        (ModelKind::Moe, moe.iter().map(|p| p.combined).collect()),
    ])
}

fn run_fold(
    firm: &FirmData,
    fold: &FoldSpec,
    regime: RegimeLabel,
    n: usize,
    cfg: &BacktestConfig,
) -> Result<FoldResult> {
    let w = cfg.window;
    let Range { start: ts, end: te } = fold.train_range.clone();
    let ve = fold.val_range.end;
    let scaler = fit_scaler(&firm.values[ts..te])?;
    let z: Vec<f64> = firm.values[..n].iter().map(|&v| scaler.apply(v)).collect();

    let train_windows = windows_for(&z, w, ts + w..te);
    let (fit, stop) = split_early_stopping(train_windows, cfg.es_fraction)?;
    let (lstm, history) =
        train_early_stopping(&fit, &stop, cfg.hidden, &cfg.task_train_config(&firm.ticker, fold.fold_id))?;

    let (lt, ls, ly) = linear_rows(firm, &z, ts..te);
    let linear = fit_ols(&lt, &ls, &ly)?.params;

    let weights = cfg.gates.gate_for_regime(regime);
    let tag = RecordTag {
        source: RecordSource::WalkForward,
        ticker: &firm.ticker,
        fold_id: fold.fold_id,
        regime,
        horizon: 1,
    };
    let train_targets = &z[ts..te];

    // One-step predictions over the validation window from observed inputs.
    let mut one_step: Vec<(ModelKind, Vec<f64>)> =
        ModelKind::ALL.iter().map(|&m| (m, Vec::with_capacity(ve - te))).collect();
    let mut predictions = Vec::with_capacity(3 * (ve - te));
    for t in te..ve {
        let rnn = predict_lstm(&lstm, &z[t - w..t])?;
        let lm = predict_linear(&linear, t as f64, firm.sigma_required(t - 1)?);
        let moe = MoePrediction::from_components(rnn, lm, weights, regime);
        for (k, p) in [lm, rnn, moe.combined].into_iter().enumerate() {
            one_step[k].1.push(p);
            predictions.push(PredictionRow {
                ticker: firm.ticker.clone(),
                fold_id: fold.fold_id,
                t_index: t,
                date: firm.dates[t],
                model: one_step[k].0,
                actual: firm.values[t],
                predicted: scaler.invert(p),
            });
        }
    }
    let mut records = score_models(&tag, &one_step, &z[te..ve], train_targets, &scaler)?;

    let launch = ForecastLaunch { window: z[te - w..te].to_vec(), t: te, sigma: firm.sigma_required(te - 1)?, regime };
    for &h in &cfg.horizons.horizons {
        let paths = recursive_paths(&lstm, &linear, &cfg.gates, &launch, h)?;
        let end = (te + h).min(n);
        let tag = RecordTag { horizon: h, ..tag.clone() };
        records.extend(score_models(&tag, &paths, &z[te..end], train_targets, &scaler)?);
    }

    let fitted = FittedFold {
        ticker: firm.ticker.clone(),
        fold_id: fold.fold_id,
        regime,
        scaler,
        lstm,
        linear,
        history,
        launch,
    };
    Ok(FoldResult { records, predictions, fitted })
}

/// Walk-forward protocol: per fold, reclassify every firm from volatility known
/// at the end of training, refit both experts from scratch on the training
/// window and score Linear, LSTM and MoE on the validation window.
pub fn run_walk_forward(
    universe: &[FirmData],
    plan: &WalkForwardPlan,
    cfg: &BacktestConfig,
) -> Result<WalkForwardOutput> {
    cfg.validate()?;
    if universe.is_empty() {
        return Err(Error::Empty("walk-forward universe"));
    }
    let n = universe.iter().map(FirmData::len).min().unwrap_or(0);
    if let Some(last) = plan.folds.last() {
        if last.val_range.end > n {
            return Err(Error::InvalidArgument(format!(
                "plan needs {} observations but the shortest series has {n}",
                last.val_range.end
            )));
        }
    }

    let vols: BTreeMap<String, VolatilitySeries> = universe.iter().map(|f| (f.ticker.clone(), f.vol.clone())).collect();
    let offset = universe[0].offset;
    let assignments = plan
        .folds
        .iter()
        .map(|fold| assign_regimes(fold.fold_id, &vols, fold.val_range.start - 1 + offset, cfg.policy))
        .collect::<Result<Vec<_>>>()?;

    let tasks: Vec<(&FoldSpec, &FirmData, RegimeLabel)> = plan
        .folds
        .iter()
        .zip(&assignments)
        .flat_map(|(fold, a)| universe.iter().map(move |firm| (fold, firm, a.labels[&firm.ticker])))
        .collect();
    let results = tasks
        .par_iter()
        .map(|&(fold, firm, regime)| {
            run_fold(firm, fold, regime, n, cfg).map_err(|e| Error::Task {
                ticker: firm.ticker.clone(),
                fold: fold.fold_id,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut out = WalkForwardOutput { assignments, ..Default::default() };
    for r in results {
        out.records.extend(r.records);
        out.predictions.extend(r.predictions);
        out.fitted.push(r.fitted);
    }
    out.records.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    Ok(out)
}

fn test_geometry(n: usize, cfg: &BacktestConfig) -> Result<(usize, Range<usize>)> {
    let test_len = cfg.val_len.max(cfg.horizons.max());
    let test_start = n
        .checked_sub(test_len)
        .filter(|&s| s >= cfg.init_train)
        .ok_or(Error::SeriesTooShort { needed: cfg.init_train + test_len, got: n })?;
    let train_start = match cfg.train_mode {
        TrainMode::SlidingTrain => test_start - cfg.init_train,
        TrainMode::ExpandingTrain => 0,
    };
    Ok((test_start, train_start..test_start))
}

/// Fits one LSTM and one linear model on the pooled training windows of every
/// universe firm, for use on firms never seen in training.
pub fn train_pooled(universe: &[FirmData], n: usize, cfg: &BacktestConfig) -> Result<PooledModels> {
    cfg.validate()?;
    let (test_start, train) = test_geometry(n, cfg)?;
    let (mut fit, mut stop) = (Vec::new(), Vec::new());
    let (mut lt, mut ls, mut ly) = (Vec::new(), Vec::new(), Vec::new());
    for firm in universe {
        let scaler = fit_scaler(&firm.values[train.clone()])?;
        let z: Vec<f64> = firm.values[..n].iter().map(|&v| scaler.apply(v)).collect();
        let (f, s) =
            split_early_stopping(windows_for(&z, cfg.window, train.start + cfg.window..train.end), cfg.es_fraction)?;
        fit.extend(f);
        stop.extend(s);
        let rows = linear_rows(firm, &z, train.clone());
        lt.extend(rows.0);
        ls.extend(rows.1);
        ly.extend(rows.2);
    }
    if fit.is_empty() {
        return Err(Error::Empty("pooled training universe"));
    }
    let (lstm, history) = train_early_stopping(&fit, &stop, cfg.hidden, &cfg.task_train_config("__pooled__", 0))?;
    let linear = fit_ols(&lt, &ls, &ly)?.params;
    Ok(PooledModels { lstm, linear, history, test_start })
}

/// Scores frozen pooled models on each holdout firm's final test segment at every configured horizon.
pub fn run_holdout(
    holdout_firms: &[FirmData],
    holdout: &HoldoutSpec,
    universe_tickers: &BTreeSet<String>,
    models: &PooledModels,
    n: usize,
    cfg: &BacktestConfig,
) -> Result<Vec<MetricRecord>> {
    if let Some(t) = holdout.labeled().iter().map(|(t, _)| t).find(|t| universe_tickers.contains(*t)) {
        return Err(Error::HoldoutOverlap(t.clone()));
    }
    if holdout.is_empty() {
        return Ok(Vec::new());
    }
    let (test_start, train) = test_geometry(n, cfg)?;
    debug_assert_eq!(test_start, models.test_start);
    let by_ticker: BTreeMap<&str, &FirmData> = holdout_firms.iter().map(|f| (f.ticker.as_str(), f)).collect();
    let mut records = Vec::new();
    for (ticker, regime) in holdout.labeled() {
        let firm = by_ticker
            .get(ticker.as_str())
            .ok_or_else(|| Error::InvalidArgument(format!("no data for holdout ticker {ticker}")))?;
        let scaler = fit_scaler(&firm.values[train.clone()])?;
        let z: Vec<f64> = firm.values[..n].iter().map(|&v| scaler.apply(v)).collect();
        let launch = ForecastLaunch {
            window: z[test_start - cfg.window..test_start].to_vec(),
            t: test_start,
            sigma: firm.sigma_required(test_start - 1)?,
            regime,
        };
        let tag = RecordTag { source: RecordSource::Holdout, ticker: &ticker, fold_id: 0, regime, horizon: 0 };
        for &h in &cfg.horizons.horizons {
            let paths = recursive_paths(&models.lstm, &models.linear, &cfg.gates, &launch, h)?;
            let end = (test_start + h).min(n);
            let tag = RecordTag { horizon: h, ..tag.clone() };
            records.extend(score_models(&tag, &paths, &z[test_start..end], &z[train.clone()], &scaler)?);
        }
    }
    Ok(records)
}

/// Full protocol: holdout selection by full-sample volatility ranking,
/// walk-forward over the remaining universe, then holdout scoring of pooled models.
pub fn run_backtest(series: &BTreeMap<String, PriceSeries>, cfg: &BacktestConfig) -> Result<BacktestOutput> {
    cfg.validate()?;
    let firms = series.values().map(|s| prepare_firm(s, cfg.mode, &cfg.policy)).collect::<Result<Vec<_>>>()?;
    if firms.is_empty() {
        return Err(Error::Empty("price universe"));
    }
    let n = firms.iter().map(FirmData::len).min().unwrap_or(0);

    let holdout = if cfg.holdout_k == 0 {
        HoldoutSpec { volatile_holdout: vec![], stable_holdout: vec![] }
    } else {
        let mean_vols: Vec<(&str, f64)> =
            firms.iter().map(|f| (f.ticker.as_str(), f.vol.mean().unwrap_or(0.0))).collect();
        let (top, bottom) = rank_by_volatility(mean_vols, cfg.holdout_k)?;
        HoldoutSpec { volatile_holdout: top, stable_holdout: bottom }
    };
    let (held, universe): (Vec<FirmData>, Vec<FirmData>) = firms.into_iter().partition(|f| holdout.contains(&f.ticker));

    let plan = plan_walk_forward(n, cfg.init_train, cfg.val_len, cfg.step, cfg.train_mode)?;
    let walk_forward = run_walk_forward(&universe, &plan, cfg)?;

    let (pooled, holdout_records) = if holdout.is_empty() {
        (None, Vec::new())
    } else {
        let pooled = train_pooled(&universe, n, cfg)?;
        let tickers: BTreeSet<String> = universe.iter().map(|f| f.ticker.clone()).collect();
        let recs = run_holdout(&held, &holdout, &tickers, &pooled, n, cfg)?;
        (Some(pooled), recs)
    };

    Ok(BacktestOutput { plan, holdout, walk_forward, holdout_records, pooled })
}
