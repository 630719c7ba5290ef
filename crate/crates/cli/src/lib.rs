//! Configuration, model store, reports and commands for the `volmoe` binary.

pub mod commands;
pub mod config;
pub mod report;
pub mod store;

use std::path::PathBuf;

pub use commands::{
    cmd_backtest, cmd_classify, cmd_forecast, cmd_report, cmd_synth, load_universe, BacktestFiles, ForecastRow, Outputs,
};
pub use config::{parse_config, parse_str, ConfigError, RunConfig};
pub use store::{ModelStore, StoredModel, StoredParams};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] volmoe_core::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("no stored model at {0}; run `backtest` with this config first")]
    MissingModel(PathBuf),
    #[error("stored model {path} is unusable: {why}")]
    CorruptModel { path: PathBuf, why: String },
    #[error("no metric records at {0}; run `backtest` with this config first")]
    MissingRecords(PathBuf),
    #[error("unknown ticker {0}")]
    UnknownTicker(String),
    #[error("no stored fold {fold} for {ticker}")]
    NoFold { ticker: String, fold: usize },
}
