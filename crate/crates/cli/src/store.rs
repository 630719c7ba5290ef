//! On-disk model store: one JSON document per (ticker, fold, model kind).

use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use volmoe_core::evaluation::{ForecastLaunch, ModelKind};
use volmoe_core::{GateWeights, LinearParams, LstmParams, RegimeLabel, Scaler};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Shape {
    pub window: usize,
    pub hidden: usize,
    pub input_dim: usize,
    pub num_params: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StoredParams {
    Linear(LinearParams),
    Lstm(Box<LstmParams>),
    Moe(GateWeights),
}

impl StoredParams {
    pub fn kind(&self) -> ModelKind {
        match self {
            StoredParams::Linear(_) => ModelKind::Linear,
            StoredParams::Lstm(_) => ModelKind::Lstm,
            StoredParams::Moe(_) => ModelKind::Moe,
        }
    }

    fn shape(&self, window: usize) -> Shape {
        match self {
            StoredParams::Linear(_) => Shape { window, hidden: 0, input_dim: 0, num_params: 3 },
            StoredParams::Lstm(p) => {
                Shape { window, hidden: p.hidden, input_dim: p.input_dim, num_params: p.num_params() }
            }
            StoredParams::Moe(_) => Shape { window, hidden: 0, input_dim: 0, num_params: 2 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredModel {
    pub fingerprint: String,
    pub ticker: String,
    pub fold_id: usize,
    pub regime: RegimeLabel,
    pub shape: Shape,
    pub scaler: Scaler,
    /// Forecast origin at the end of the fold's training range.
    pub launch: ForecastLaunch,
    pub launch_date: NaiveDate,
    pub params: StoredParams,
}

impl StoredModel {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        fingerprint: &str,
        ticker: &str,
        fold_id: usize,
        regime: RegimeLabel,
        scaler: Scaler,
        launch: ForecastLaunch,
        launch_date: NaiveDate,
        params: StoredParams,
    ) -> Self {
        let shape = params.shape(launch.window.len());
        Self {
            fingerprint: fingerprint.into(),
            ticker: ticker.into(),
            fold_id,
            regime,
            shape,
            scaler,
            launch,
            launch_date,
            params,
        }
    }

    fn check(&self, fingerprint: &str, path: &Path) -> Result<(), CliError> {
        let bad = |why: String| Err(CliError::CorruptModel { path: path.to_path_buf(), why });
        if self.fingerprint != fingerprint {
            return bad(format!("fingerprint {} does not match config {fingerprint}", self.fingerprint));
        }
        if self.shape != self.params.shape(self.launch.window.len()) {
            return bad("shape metadata disagrees with parameters".into());
        }
        if let StoredParams::Lstm(p) = &self.params {
            p.validate().map_err(|e| CliError::CorruptModel { path: path.to_path_buf(), why: e.to_string() })?;
        }
        Ok(())
    }
}

/// Directory of stored models for one config fingerprint.
#[derive(Debug, Clone)]
pub struct ModelStore {
    dir: PathBuf,
    fingerprint: String,
}

impl ModelStore {
    pub fn new(report_dir: &Path, fingerprint: &str) -> Self {
        Self { dir: report_dir.join(format!("models-{}", &fingerprint[..12])), fingerprint: fingerprint.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, ticker: &str, fold_id: usize, kind: ModelKind) -> PathBuf {
        self.dir.join(format!("{ticker}.fold{fold_id:03}.{}.json", kind.as_str()))
    }

    pub fn save(&self, model: &StoredModel) -> Result<PathBuf, CliError> {
        fs::create_dir_all(&self.dir)?;
        let path = self.path_for(&model.ticker, model.fold_id, model.params.kind());
        let mut text = serde_json::to_string_pretty(model)?;
        text.push('\n');
        fs::write(&path, text)?;
        Ok(path)
    }

    pub fn load(&self, ticker: &str, fold_id: usize, kind: ModelKind) -> Result<StoredModel, CliError> {
        let path = self.path_for(ticker, fold_id, kind);
        let text = fs::read_to_string(&path).map_err(|_| CliError::MissingModel(path.clone()))?;
        let model: StoredModel = serde_json::from_str(&text)?;
        if model.params.kind() != kind || model.ticker != ticker || model.fold_id != fold_id {
            return Err(CliError::CorruptModel { path, why: "file name and contents disagree".into() });
        }
        model.check(&self.fingerprint, &path)?;
        Ok(model)
    }

    /// Fold ids stored for `ticker`, ascending.
    pub fn folds(&self, ticker: &str) -> Result<Vec<usize>, CliError> {
        let entries = fs::read_dir(&self.dir).map_err(|_| CliError::MissingModel(self.dir.clone()))?;
        let prefix = format!("{ticker}.fold");
        let mut folds: Vec<usize> = entries
            .filter_map(|e| e.ok())
            .filter_map(|e| {
                let name = e.file_name().into_string().ok()?;
                let rest = name.strip_prefix(&prefix)?;
                rest.split('.').next()?.parse().ok()
            })
            .collect();
        folds.sort_unstable();
        folds.dedup();
        Ok(folds)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use volmoe_core::expert_lstm::{init_params, predict_lstm};

    fn launch() -> ForecastLaunch {
        ForecastLaunch { window: vec![0.1, -0.2, 0.3], t: 80, sigma: 0.013, regime: RegimeLabel::Volatile }
    }

    fn model(params: StoredParams) -> StoredModel {
        let date = NaiveDate::from_ymd_opt(2015, 5, 1).unwrap();
        let scaler = Scaler { mean: 101.3, std: 2.7 };
        StoredModel::new(&"ab".repeat(32), "VOL01", 3, RegimeLabel::Volatile, scaler, launch(), date, params)
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let store = ModelStore::new(dir.path(), &"ab".repeat(32));
        let lstm = init_params(7, 1, 99).unwrap();
        let linear = LinearParams { beta0: 0.1 + 0.2, beta1: 1.0 / 3.0, beta2: -2.0f64.sqrt() };
        for p in [
            StoredParams::Lstm(Box::new(lstm.clone())),
            StoredParams::Linear(linear),
            StoredParams::Moe(GateWeights::new(0.7).unwrap()),
        ] {
            let m = model(p.clone());
            store.save(&m).unwrap();
            let back = store.load("VOL01", 3, p.kind()).unwrap();
            assert_eq!(back, m);
        }
        let StoredParams::Lstm(back) = store.load("VOL01", 3, ModelKind::Lstm).unwrap().params else { panic!() };
        let w = [0.3, -1.2, 0.05];
        assert_eq!(predict_lstm(&lstm, &w).unwrap().to_bits(), predict_lstm(&back, &w).unwrap().to_bits());
        assert_eq!(store.folds("VOL01").unwrap(), vec![3]);
        assert!(store.folds("STB01").unwrap().is_empty());
    }

    #[test]
    fn missing_and_mismatched_models_are_errors() {
        let dir = tempfile::tempdir().unwrap();
        let store = ModelStore::new(dir.path(), &"ab".repeat(32));
        assert!(matches!(store.load("VOL01", 0, ModelKind::Lstm), Err(CliError::MissingModel(_))));
        store.save(&model(StoredParams::Linear(LinearParams::ZERO))).unwrap();
        let other = ModelStore { dir: store.dir.clone(), fingerprint: "cd".repeat(32) };
        assert!(matches!(other.load("VOL01", 3, ModelKind::Linear), Err(CliError::CorruptModel { .. })));
    }
}
