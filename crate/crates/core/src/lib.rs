//! Volatility-regime mixture-of-experts forecasting.
//!
//! Two experts share one forecasting problem: a from-scratch LSTM trained by
//! backpropagation through time with Adam, and an ordinary least squares model
//! of price on time and rolling volatility. A fixed gate keyed by each firm's
//! volatility regime blends them. The [`evaluation`] module runs the
//! walk-forward protocol, holdout stress sets and recursive multi-horizon
//! forecasts, and aggregates error metrics per regime.

// Domain checks are written as `!(x > 0.0)` so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod evaluation;
pub mod expert_linear;
pub mod expert_lstm;
pub mod market_data;
pub mod moe;
pub mod regime;
pub mod seed;

pub use error::{Error, Result};
pub use evaluation::{
    aggregate_stratified, mae, mase, mse, plan_walk_forward, recursive_forecast, rmse, BacktestConfig, BacktestOutput,
    DataMode, Forecaster, HoldoutSpec, HorizonSpec, MetricRecord, ModelKind, RecordSource, StratifiedReport, TrainMode,
    WalkForwardPlan,
};
pub use expert_linear::{fit_ols, predict_linear, LinearFitReport, LinearParams};
pub use expert_lstm::{LstmParams, LstmState, TrainConfig};
pub use market_data::{PricePoint, PriceSeries, ReturnSeries, Scaler, VolatilitySeries};
pub use moe::{GateTable, GateWeights, MoePrediction};
pub use regime::{RegimeLabel, RegimePolicy};
