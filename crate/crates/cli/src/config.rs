//! Run configuration in a line-oriented `section.key = value` format.
//!
//! Blank lines and lines starting with `#` are ignored. Every key is optional;
//! absent keys take their defaults. Unknown and repeated keys are rejected.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use sha2::{Digest, Sha256};
use volmoe_core::evaluation::{BacktestConfig, HorizonSpec, TrainMode};
use volmoe_core::market_data::{DataMode, SyntheticSpec};
use volmoe_core::{GateTable, RegimePolicy, TrainConfig};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given more than once")]
    DuplicateKey { line: usize, key: String },
    #[error("`{key}` = {value:?} is outside its domain: {domain}")]
    Domain { key: &'static str, domain: &'static str, value: String },
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyKind {
    Threshold,
    Median,
}

impl PolicyKind {
    fn as_str(self) -> &'static str {
        match self {
            PolicyKind::Threshold => "threshold",
            PolicyKind::Median => "median",
        }
    }

    fn default_window(self) -> usize {
        match self {
            PolicyKind::Threshold => 30,
            PolicyKind::Median => 21,
        }
    }
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Price CSV to read; `None` means generate the synthetic universe.
    pub data_path: Option<PathBuf>,
    pub data_mode: DataMode,
    pub window: usize,
    pub policy: PolicyKind,
    pub vol_window: usize,
    pub vol_tau: f64,
    pub init_train: usize,
    pub val_len: usize,
    pub step: usize,
    pub train_mode: TrainMode,
    /// The `seed` field is ignored; per-task seeds derive from [`RunConfig::seed`].
    pub train: TrainConfig,
    pub es_fraction: f64,
    pub hidden: usize,
    pub gate_volatile_w_rnn: f64,
    pub gate_stable_w_rnn: f64,
    pub horizons: Vec<usize>,
    pub holdout_k: usize,
    pub seed: u64,
    pub report_dir: PathBuf,
    pub synth: SyntheticSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        parse_str("").expect("defaults are in domain")
    }
}

// Domain descriptions double as error text.
const POS_INT: &str = "integer >= 1";
const NONNEG_INT: &str = "integer >= 0";
const POS_REAL: &str = "finite real > 0";
const NONNEG_REAL: &str = "finite real >= 0";
const UNIT_OPEN: &str = "real in (0, 1)";
const UNIT_CLOSED: &str = "real in [0, 1]";
const REAL: &str = "finite real";

struct Raw {
    values: BTreeMap<String, (usize, String)>,
}

impl Raw {
    fn take(&mut self, key: &str) -> Option<String> {
        self.values.remove(key).map(|(_, v)| v)
    }

    fn parse<T: std::str::FromStr>(
        &mut self,
        key: &'static str,
        default: T,
        domain: &'static str,
        ok: impl Fn(&T) -> bool,
    ) -> Result<T, ConfigError> {
        match self.take(key) {
            None => Ok(default),
            Some(v) => match v.parse::<T>() {
                Ok(x) if ok(&x) => Ok(x),
                _ => Err(ConfigError::Domain { key, domain, value: v }),
            },
        }
    }

    fn usize(&mut self, key: &'static str, default: usize, min: usize) -> Result<usize, ConfigError> {
        let domain = if min == 0 { NONNEG_INT } else { POS_INT };
        self.parse(key, default, domain, |&x| x >= min)
    }

    fn real(&mut self, key: &'static str, default: f64, domain: &'static str) -> Result<f64, ConfigError> {
        let ok = |x: &f64| {
            x.is_finite()
                && match domain {
                    POS_REAL => *x > 0.0,
                    NONNEG_REAL => *x >= 0.0,
                    UNIT_OPEN => *x > 0.0 && *x < 1.0,
                    UNIT_CLOSED => (0.0..=1.0).contains(x),
                    _ => true,
                }
        };
        self.parse(key, default, domain, ok)
    }

    fn choice<T: Copy>(
        &mut self,
        key: &'static str,
        default: T,
        domain: &'static str,
        options: &[(&str, T)],
    ) -> Result<T, ConfigError> {
        match self.take(key) {
            None => Ok(default),
            Some(v) => options
                .iter()
                .find(|(name, _)| name.eq_ignore_ascii_case(&v))
                .map(|&(_, x)| x)
                .ok_or(ConfigError::Domain { key, domain, value: v }),
        }
    }
}

fn domain(key: &'static str, domain: &'static str, value: impl ToString) -> ConfigError {
    ConfigError::Domain { key, domain, value: value.to_string() }
}

pub fn parse_config(path: impl AsRef<Path>) -> Result<RunConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    parse_str(&text)
}

pub fn parse_str(text: &str) -> Result<RunConfig, ConfigError> {
    let mut values = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (key, value) =
            trimmed.split_once('=').ok_or_else(|| ConfigError::Syntax { line: line_no, text: trimmed.to_string() })?;
        let key = key.trim();
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(ConfigError::Syntax { line: line_no, text: trimmed.to_string() });
        }
        if values.insert(key.to_string(), (line_no, value.trim().to_string())).is_some() {
            return Err(ConfigError::DuplicateKey { line: line_no, key: key.to_string() });
        }
    }
    let mut raw = Raw { values };
    let cfg = resolve(&mut raw)?;
    if let Some((key, (line, _))) = raw.values.into_iter().min_by_key(|(_, (line, _))| *line) {
        return Err(ConfigError::UnknownKey { line, key });
    }
    Ok(cfg)
}

fn resolve(raw: &mut Raw) -> Result<RunConfig, ConfigError> {
    let data_path = raw.take("data.path").filter(|p| !p.is_empty()).map(PathBuf::from);
    let data_mode = raw.choice(
        "data.mode",
        DataMode::PriceLevels,
        "prices | log_returns",
        &[
            ("prices", DataMode::PriceLevels),
            ("PriceLevels", DataMode::PriceLevels),
            ("log_returns", DataMode::LogReturns),
            ("LogReturns", DataMode::LogReturns),
        ],
    )?;
    let window = raw.usize("window.length", 10, 1)?;

    let policy = raw.choice(
        "vol.policy",
        PolicyKind::Median,
        "threshold | median",
        &[("threshold", PolicyKind::Threshold), ("median", PolicyKind::Median)],
    )?;
    let vol_window = raw.parse("vol.window", policy.default_window(), "integer >= 2", |&w| w >= 2)?;
    let vol_tau = raw.real("vol.tau", 0.025, POS_REAL)?;

    let init_train = raw.usize("wf.init_train", 80, 1)?;
    if init_train < window + 2 {
        return Err(domain("wf.init_train", "integer >= window.length + 2", init_train));
    }
    let val_len = raw.usize("wf.val_len", 20, 1)?;
    let step = raw.usize("wf.step", 20, 1)?;
    let train_mode = raw.choice(
        "wf.mode",
        TrainMode::SlidingTrain,
        "sliding | expanding",
        &[("sliding", TrainMode::SlidingTrain), ("expanding", TrainMode::ExpandingTrain)],
    )?;

    let d = TrainConfig::default();
    let max_epochs = raw.usize("train.max_epochs", d.max_epochs, 1)?;
    let patience = raw.usize("train.patience", d.patience, 1)?;
    if patience > max_epochs {
        return Err(domain("train.patience", "integer in [1, train.max_epochs]", patience));
    }
    let train = TrainConfig {
        learning_rate: raw.real("train.learning_rate", d.learning_rate, POS_REAL)?,
        batch_size: raw.usize("train.batch_size", d.batch_size, 1)?,
        max_epochs,
        patience,
        adam_beta1: raw.real("train.adam_beta1", d.adam_beta1, UNIT_OPEN)?,
        adam_beta2: raw.real("train.adam_beta2", d.adam_beta2, UNIT_OPEN)?,
        adam_eps: raw.real("train.adam_eps", d.adam_eps, POS_REAL)?,
        seed: 0,
        clip_norm: match raw.take("train.clip_norm") {
            None => None,
            Some(v) if v == "none" => None,
            Some(v) => match v.parse::<f64>() {
                Ok(c) if c.is_finite() && c > 0.0 => Some(c),
                _ => return Err(domain("train.clip_norm", "none | finite real > 0", v)),
            },
        },
    };
    let es_fraction = raw.real("train.es_fraction", 0.2, UNIT_OPEN)?;
    let hidden = raw.usize("model.hidden", 50, 1)?;

    let gate_volatile_w_rnn = raw.real("gate.volatile.w_rnn", 0.7, UNIT_CLOSED)?;
    let gate_stable_w_rnn = raw.real("gate.stable.w_rnn", 0.3, UNIT_CLOSED)?;

    let horizons = match raw.take("horizons") {
        None => HorizonSpec::default().horizons,
        Some(v) if v.is_empty() => Vec::new(),
        Some(v) => {
            let parsed: Result<Vec<usize>, _> = v.split(',').map(|h| h.trim().parse::<usize>()).collect();
            match parsed.ok().and_then(|hs| HorizonSpec::new(hs).ok()) {
                Some(spec) => spec.horizons,
                None => return Err(domain("horizons", "comma-separated integers >= 1, or empty", v)),
            }
        }
    };
    let holdout_k = raw.usize("holdout.k", 10, 0)?;
    let seed = raw.parse("seed", 42u64, "unsigned 64-bit integer", |_| true)?;
    let report_dir = PathBuf::from(raw.take("report.dir").unwrap_or_else(|| "reports".into()));
    if report_dir.as_os_str().is_empty() {
        return Err(domain("report.dir", "non-empty path", ""));
    }

    let s = SyntheticSpec::default();
    let synth = SyntheticSpec {
        n_stable: raw.usize("synth.n_stable", 16, 0)?,
        n_volatile: raw.usize("synth.n_volatile", 16, 0)?,
        length: raw.usize("synth.length", s.length, 2)?,
        stable_noise: raw.real("synth.stable_noise", s.stable_noise, NONNEG_REAL)?,
        volatile_noise: raw.real("synth.volatile_noise", s.volatile_noise, NONNEG_REAL)?,
        volatile_ar: raw.real("synth.volatile_ar", s.volatile_ar, REAL)?,
        volatile_sine_amplitude: raw.real("synth.volatile_sine_amplitude", s.volatile_sine_amplitude, REAL)?,
        volatile_sine_frequency: raw.real("synth.volatile_sine_frequency", s.volatile_sine_frequency, REAL)?,
        volatile_drift: raw.real("synth.volatile_drift", s.volatile_drift, NONNEG_REAL)?,
        start: match raw.take("synth.start") {
            None => s.start,
            Some(v) => {
                NaiveDate::parse_from_str(&v, "%Y-%m-%d").map_err(|_| domain("synth.start", "date YYYY-MM-DD", &v))?
            }
        },
    };
    if synth.n_stable + synth.n_volatile == 0 {
        return Err(domain("synth.n_volatile", "n_stable + n_volatile >= 1", 0));
    }

    Ok(RunConfig {
        data_path,
        data_mode,
        window,
        policy,
        vol_window,
        vol_tau,
        init_train,
        val_len,
        step,
        train_mode,
        train,
        es_fraction,
        hidden,
        gate_volatile_w_rnn,
        gate_stable_w_rnn,
        horizons,
        holdout_k,
        seed,
        report_dir,
        synth,
    })
}

impl RunConfig {
    /// Canonical text form. Parsing it yields an equal config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        self.write_body(&mut s);
        let _ = writeln!(s, "report.dir = {}", self.report_dir.display());
        s
    }

    // Every key except report.dir, which only says where outputs go.
    fn write_body(&self, s: &mut String) {
        let t = &self.train;
        let y = &self.synth;
        let path = self.data_path.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let horizons: Vec<String> = self.horizons.iter().map(usize::to_string).collect();
        let lines: Vec<(&str, String)> = vec![
            ("data.path", path),
            ("data.mode", self.data_mode.as_str().into()),
            ("window.length", self.window.to_string()),
            ("vol.policy", self.policy.as_str().into()),
            ("vol.window", self.vol_window.to_string()),
            ("vol.tau", self.vol_tau.to_string()),
            ("wf.init_train", self.init_train.to_string()),
            ("wf.val_len", self.val_len.to_string()),
            ("wf.step", self.step.to_string()),
            ("wf.mode", self.train_mode.as_str().into()),
            ("train.learning_rate", t.learning_rate.to_string()),
            ("train.batch_size", t.batch_size.to_string()),
            ("train.max_epochs", t.max_epochs.to_string()),
            ("train.patience", t.patience.to_string()),
            ("train.adam_beta1", t.adam_beta1.to_string()),
            ("train.adam_beta2", t.adam_beta2.to_string()),
            ("train.adam_eps", t.adam_eps.to_string()),
            ("train.clip_norm", t.clip_norm.map_or("none".into(), |c| c.to_string())),
            ("train.es_fraction", self.es_fraction.to_string()),
            ("model.hidden", self.hidden.to_string()),
            ("gate.volatile.w_rnn", self.gate_volatile_w_rnn.to_string()),
            ("gate.stable.w_rnn", self.gate_stable_w_rnn.to_string()),
            ("horizons", horizons.join(",")),
            ("holdout.k", self.holdout_k.to_string()),
            ("seed", self.seed.to_string()),
            ("synth.n_stable", y.n_stable.to_string()),
            ("synth.n_volatile", y.n_volatile.to_string()),
            ("synth.length", y.length.to_string()),
            ("synth.stable_noise", y.stable_noise.to_string()),
            ("synth.volatile_noise", y.volatile_noise.to_string()),
            ("synth.volatile_ar", y.volatile_ar.to_string()),
            ("synth.volatile_sine_amplitude", y.volatile_sine_amplitude.to_string()),
            ("synth.volatile_sine_frequency", y.volatile_sine_frequency.to_string()),
            ("synth.volatile_drift", y.volatile_drift.to_string()),
            ("synth.start", y.start.format("%Y-%m-%d").to_string()),
        ];
        for (k, v) in lines {
            let _ = writeln!(s, "{k} = {v}");
        }
    }

    /// SHA-256 of the canonical text without `report.dir`, in hex.
    pub fn fingerprint(&self) -> String {
        let mut body = String::new();
        self.write_body(&mut body);
        Sha256::digest(body.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Fingerprint prefix used in output file names.
    pub fn short_fingerprint(&self) -> String {
        self.fingerprint()[..12].to_string()
    }

    pub fn regime_policy(&self) -> RegimePolicy {
        match self.policy {
            PolicyKind::Threshold => RegimePolicy::Threshold { vol_window: self.vol_window, tau: self.vol_tau },
            PolicyKind::Median => RegimePolicy::CrossSectionalMedian { vol_window: self.vol_window },
        }
    }

    pub fn backtest_config(&self) -> volmoe_core::Result<BacktestConfig> {
        Ok(BacktestConfig {
            mode: self.data_mode,
            window: self.window,
            policy: self.regime_policy(),
            init_train: self.init_train,
            val_len: self.val_len,
            step: self.step,
            train_mode: self.train_mode,
            hidden: self.hidden,
            train: self.train.clone(),
            es_fraction: self.es_fraction,
            gates: GateTable::from_rnn_weights(self.gate_volatile_w_rnn, self.gate_stable_w_rnn)?,
            horizons: HorizonSpec::new(self.horizons.clone())?,
            holdout_k: self.holdout_k,
            seed: self.seed,
        })
    }
}
