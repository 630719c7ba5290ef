use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::{Datelike, Days, NaiveDate, Weekday};
use volmoe_core::evaluation::{prepare_firm, recursive_forecast, run_backtest, ModelKind, StepContext};
use volmoe_core::market_data::{generate_synthetic, load_csv, write_csv};
use volmoe_core::regime::assign_regimes;
use volmoe_core::{MoePrediction, PriceSeries, RegimeLabel, RegimePolicy, VolatilitySeries};

use crate::report::{self, Stamp};
use crate::store::{ModelStore, StoredModel, StoredParams};
use crate::{CliError, RunConfig};

/// Output file names for one config. Every name carries the fingerprint prefix.
#[derive(Debug, Clone)]
pub struct Outputs {
    pub dir: PathBuf,
    pub fp: String,
}

impl Outputs {
    pub fn new(cfg: &RunConfig) -> Self {
        Self { dir: cfg.report_dir.clone(), fp: cfg.short_fingerprint() }
    }

    fn file(&self, stem: &str, ext: &str) -> PathBuf {
        self.dir.join(format!("{stem}-{}.{ext}", self.fp))
    }

    pub fn config(&self) -> PathBuf {
        self.file("config", "txt")
    }
    pub fn records(&self) -> PathBuf {
        self.file("records", "csv")
    }
    pub fn predictions(&self) -> PathBuf {
        self.file("predictions", "csv")
    }
    pub fn regimes(&self) -> PathBuf {
        self.file("regimes", "csv")
    }
    pub fn report(&self) -> PathBuf {
        self.file("report", "txt")
    }
    pub fn table(&self, regime: RegimeLabel) -> PathBuf {
        match regime {
            RegimeLabel::Stable => self.file("table1-stable", "csv"),
            RegimeLabel::Volatile => self.file("table2-volatile", "csv"),
        }
    }
    pub fn summary(&self) -> PathBuf {
        self.file("summary", "csv")
    }
    pub fn plot(&self) -> PathBuf {
        self.file("plot", "csv")
    }
}

fn stamp(cfg: &RunConfig) -> Stamp {
    Stamp { fingerprint: cfg.fingerprint(), seed: cfg.seed }
}

fn config_echo(cfg: &RunConfig) -> String {
    format!("# fingerprint {}\n# seed {}\n{}", cfg.fingerprint(), cfg.seed, cfg.to_text())
}

/// Price universe named by the config: the CSV at `data.path`, or the seeded synthetic recipe.
pub fn load_universe(cfg: &RunConfig) -> Result<BTreeMap<String, PriceSeries>, CliError> {
    Ok(match &cfg.data_path {
        Some(p) => load_csv(p)?,
        None => generate_synthetic(&cfg.synth, cfg.seed)?,
    })
}

pub fn cmd_synth(cfg: &RunConfig, out_path: &Path) -> Result<usize, CliError> {
    let universe = generate_synthetic(&cfg.synth, cfg.seed)?;
    if let Some(parent) = out_path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    write_csv(BufWriter::new(File::create(out_path)?), universe.values())?;
    Ok(universe.len())
}

/// Labels every firm under both regime rules as of the last common date.
/// The threshold rule uses simple returns, the median rule log returns; the
/// configured rule keeps its configured window and the other its default.
/// Returns the labels under the configured rule.
pub fn cmd_classify<W: Write>(cfg: &RunConfig, mut out: W) -> Result<Vec<(String, RegimeLabel)>, CliError> {
    let universe = load_universe(cfg)?;
    let configured = cfg.regime_policy();
    let (threshold, median) = match configured {
        RegimePolicy::Threshold { .. } => (configured, RegimePolicy::median()),
        RegimePolicy::CrossSectionalMedian { .. } => {
            (RegimePolicy::Threshold { vol_window: 30, tau: cfg.vol_tau }, configured)
        }
    };
    let n = universe.values().map(PriceSeries::len).min().ok_or(volmoe_core::Error::Empty("price universe"))?;
    let mut by_policy = Vec::new();
    for policy in [threshold, median] {
        let mut vols = BTreeMap::new();
        for s in universe.values() {
            vols.insert(s.ticker.clone(), prepare_firm(s, cfg.data_mode, &policy)?.vol);
        }
        let assignment = assign_regimes(0, &vols, n - 1, policy)?;
        by_policy.push((vols, assignment));
    }
    let last_date = universe.values().next().map(|s| s.points()[n - 1].date.to_string()).unwrap_or_default();
    let RegimePolicy::Threshold { vol_window: tw, tau } = threshold else { unreachable!() };
    writeln!(
        out,
        "# threshold rule: {tw}-day simple-return sigma > {tau}; median rule: {}-day log-return sigma > cross-sectional median",
        median.vol_window()
    )?;
    writeln!(out, "# as of {last_date}, configured rule {}", configured.name())?;
    writeln!(out, "# fingerprint {}, seed {}", cfg.fingerprint(), cfg.seed)?;
    writeln!(out, "{:<12} {:>12} {:>9} {:>12} {:>9}", "ticker", "sigma_thr", "threshold", "sigma_med", "median")?;
    let (thr_vols, thr) = &by_policy[0];
    let (med_vols, med) = &by_policy[1];
    let sigma = |v: &BTreeMap<String, VolatilitySeries>, t: &str| v[t].at_price_index(n - 1).unwrap_or(f64::NAN);
    for (ticker, label_thr) in &thr.labels {
        let label_med = med.labels[ticker];
        writeln!(
            out,
            "{ticker:<12} {:>12.6} {:>9} {:>12.6} {:>9}",
            sigma(thr_vols, ticker),
            label_thr.to_string(),
            sigma(med_vols, ticker),
            label_med.to_string()
        )?;
    }
    let chosen = if matches!(configured, RegimePolicy::Threshold { .. }) { thr } else { med };
    Ok(chosen.labels.iter().map(|(t, l)| (t.clone(), *l)).collect())
}

#[derive(Debug, Clone)]
pub struct BacktestFiles {
    pub records: PathBuf,
    pub predictions: PathBuf,
    pub regimes: PathBuf,
    pub config: PathBuf,
    pub models: PathBuf,
    pub n_records: usize,
}

/// Runs the full protocol and persists records, predictions, regimes and fitted models.
pub fn cmd_backtest(cfg: &RunConfig) -> Result<BacktestFiles, CliError> {
    let bt = cfg.backtest_config()?;
    let universe = load_universe(cfg)?;
    let out = run_backtest(&universe, &bt)?;
    let paths = Outputs::new(cfg);
    fs::create_dir_all(&paths.dir)?;
    fs::write(paths.config(), config_echo(cfg))?;

    let records = out.all_records();
    report::write_records(BufWriter::new(File::create(paths.records())?), &records)?;
    report::write_predictions(BufWriter::new(File::create(paths.predictions())?), &out.walk_forward.predictions)?;

    let mut regimes = csv::Writer::from_path(paths.regimes())?;
    regimes.write_record(["fold_id", "as_of_index", "ticker", "regime"])?;
    for a in &out.walk_forward.assignments {
        for (ticker, regime) in &a.labels {
            regimes.write_record([
                a.fold_id.to_string(),
                a.as_of_index.to_string(),
                ticker.clone(),
                regime.to_string(),
            ])?;
        }
    }
    regimes.flush()?;

    let fingerprint = cfg.fingerprint();
    let store = ModelStore::new(&paths.dir, &fingerprint);
    let dates: BTreeMap<&str, Vec<NaiveDate>> = universe
        .values()
        .map(|s| Ok((s.ticker.as_str(), prepare_firm(s, cfg.data_mode, &bt.policy)?.dates)))
        .collect::<Result<_, CliError>>()?;
    for f in &out.walk_forward.fitted {
        let launch_date = dates[f.ticker.as_str()][f.launch.t];
        let weights = bt.gates.gate_for_regime(f.regime);
        for params in
            [StoredParams::Linear(f.linear), StoredParams::Lstm(Box::new(f.lstm.clone())), StoredParams::Moe(weights)]
        {
            let m = StoredModel::new(
                &fingerprint,
                &f.ticker,
                f.fold_id,
                f.regime,
                f.scaler,
                f.launch.clone(),
                launch_date,
                params,
            );
            store.save(&m)?;
        }
    }

    Ok(BacktestFiles {
        records: paths.records(),
        predictions: paths.predictions(),
        regimes: paths.regimes(),
        config: paths.config(),
        models: store.dir().to_path_buf(),
        n_records: records.len(),
    })
}

/// One forecast step in raw units.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastRow {
    pub step: usize,
    pub date: NaiveDate,
    pub actual: Option<f64>,
    pub linear: f64,
    pub lstm: f64,
    pub moe: f64,
}

fn next_weekday(d: NaiveDate) -> NaiveDate {
    let mut d = d + Days::new(1);
    while matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
        d = d + Days::new(1);
    }
    d
}

/// Recursive `horizon`-step forecast from a stored fold's forecast origin.
/// Defaults to the most recent stored fold.
pub fn cmd_forecast<W: Write>(
    cfg: &RunConfig,
    ticker: &str,
    horizon: usize,
    fold: Option<usize>,
    mut out: W,
) -> Result<Vec<ForecastRow>, CliError> {
    let fingerprint = cfg.fingerprint();
    let store = ModelStore::new(&cfg.report_dir, &fingerprint);
    let folds = store.folds(ticker)?;
    let fold_id = match fold {
        Some(f) if folds.contains(&f) => f,
        Some(f) => return Err(CliError::NoFold { ticker: ticker.into(), fold: f }),
        None => *folds.last().ok_or_else(|| CliError::UnknownTicker(ticker.into()))?,
    };
    let linear = store.load(ticker, fold_id, ModelKind::Linear)?;
    let lstm = store.load(ticker, fold_id, ModelKind::Lstm)?;
    let moe = store.load(ticker, fold_id, ModelKind::Moe)?;
    let (StoredParams::Linear(lp), StoredParams::Lstm(np), StoredParams::Moe(weights)) =
        (&linear.params, &lstm.params, &moe.params)
    else {
        unreachable!("store.load checks the kind");
    };

    let launch = &moe.launch;
    let ctx = StepContext { t: launch.t as f64, sigma: launch.sigma, regime: launch.regime };
    let lm_path = recursive_forecast(lp, &launch.window, &ctx, horizon)?;
    let rnn_path = recursive_forecast(np.as_ref(), &launch.window, &ctx, horizon)?;

    let universe = load_universe(cfg)?;
    let series = universe.get(ticker).ok_or_else(|| CliError::UnknownTicker(ticker.into()))?;
    let firm = prepare_firm(series, cfg.data_mode, &cfg.regime_policy())?;

    let scaler = moe.scaler;
    let mut rows = Vec::with_capacity(horizon);
    let mut date = moe.launch_date;
    for (j, (&lm, &rnn)) in lm_path.iter().zip(&rnn_path).enumerate() {
        let idx = launch.t + j;
        if j > 0 {
            date = firm.dates.get(idx).copied().unwrap_or_else(|| next_weekday(date));
        }
        let combined = MoePrediction::from_components(rnn, lm, *weights, launch.regime).combined;
        rows.push(ForecastRow {
            step: j + 1,
            date,
            actual: firm.values.get(idx).copied(),
            linear: scaler.invert(lm),
            lstm: scaler.invert(rnn),
            moe: scaler.invert(combined),
        });
    }

    writeln!(
        out,
        "# {ticker} fold {fold_id}, origin {}, regime {}, w_rnn {}, fingerprint {}, seed {}",
        moe.launch_date, launch.regime, weights.w_rnn, fingerprint, cfg.seed
    )?;
    writeln!(out, "step,date,actual,linear,lstm,moe")?;
    for r in &rows {
        let actual = r.actual.map(|a| a.to_string()).unwrap_or_default();
        writeln!(out, "{},{},{actual},{},{},{}", r.step, r.date, r.linear, r.lstm, r.moe)?;
    }
    Ok(rows)
}

/// Renders the text report, table CSVs, the long summary and plot data from persisted records.
pub fn cmd_report(cfg: &RunConfig) -> Result<String, CliError> {
    let paths = Outputs::new(cfg);
    let records_path = paths.records();
    let file = File::open(&records_path).map_err(|_| CliError::MissingRecords(records_path.clone()))?;
    let records = report::read_records(file)?;
    let pred_path = paths.predictions();
    let predictions =
        report::read_predictions(File::open(&pred_path).map_err(|_| CliError::MissingRecords(pred_path.clone()))?)?;

    let stamp = stamp(cfg);
    let text = report::render_text(&stamp, &cfg.to_text(), &records);
    fs::write(paths.report(), &text)?;
    for regime in [RegimeLabel::Stable, RegimeLabel::Volatile] {
        fs::write(paths.table(regime), report::table_csv(&stamp, &records, regime)?)?;
    }
    fs::write(paths.summary(), report::summary_csv(&stamp, &records)?)?;
    report::write_plot_data(BufWriter::new(File::create(paths.plot())?), &predictions)?;
    fs::write(paths.config(), config_echo(cfg))?;
    Ok(text)
}
