//! Walk-forward evaluation, holdout stress sets, recursive multi-horizon
//! forecasts and regime-stratified error aggregation.

mod backtest;
mod forecast;
mod metrics;
mod plan;
mod records;

pub use crate::market_data::DataMode;
pub use backtest::{
    prepare_firm, run_backtest, run_holdout, run_walk_forward, train_pooled, BacktestConfig, BacktestOutput, FirmData,
    FittedFold, ForecastLaunch, PooledModels, PredictionRow, WalkForwardOutput,
};
pub use forecast::{moe_recursive_forecast, recursive_forecast, Forecaster, StepContext};
pub use metrics::{improvement_pct, mae, mase, mse, rmse};
pub use plan::{plan_walk_forward, FoldSpec, TrainMode, WalkForwardPlan};
pub use records::{
    aggregate_stratified, CellKey, CellStats, HoldoutSpec, HorizonSpec, MetricRecord, ModelKind, RecordSource,
    RecordTag, StratifiedReport, Summary,
};
