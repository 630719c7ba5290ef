//! Records and predictions on disk, and the tables rendered from them.

use std::fmt::Write as _;
use std::io::{Read, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use volmoe_core::evaluation::{
    aggregate_stratified, improvement_pct, CellStats, MetricRecord, ModelKind, PredictionRow, RecordSource,
    StratifiedReport, Summary,
};
use volmoe_core::RegimeLabel;

use crate::CliError;

pub fn write_records<W: Write>(w: W, records: &[MetricRecord]) -> Result<(), CliError> {
    let mut out = csv::Writer::from_writer(w);
    for r in records {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_records<R: Read>(r: R) -> Result<Vec<MetricRecord>, CliError> {
    let mut rdr = csv::Reader::from_reader(r);
    Ok(rdr.deserialize().collect::<Result<Vec<MetricRecord>, _>>()?)
}

/// One persisted one-step prediction in raw units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionLine {
    pub ticker: String,
    pub fold_id: usize,
    pub t_index: usize,
    pub date: NaiveDate,
    pub model: String,
    pub actual: f64,
    pub predicted: f64,
}

impl From<&PredictionRow> for PredictionLine {
    fn from(p: &PredictionRow) -> Self {
        Self {
            ticker: p.ticker.clone(),
            fold_id: p.fold_id,
            t_index: p.t_index,
            date: p.date,
            model: p.model.as_str().into(),
            actual: p.actual,
            predicted: p.predicted,
        }
    }
}

pub fn write_predictions<W: Write>(w: W, rows: &[PredictionRow]) -> Result<(), CliError> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(PredictionLine::from(r))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_predictions<R: Read>(r: R) -> Result<Vec<PredictionLine>, CliError> {
    let mut rdr = csv::Reader::from_reader(r);
    Ok(rdr.deserialize().collect::<Result<Vec<PredictionLine>, _>>()?)
}

/// Tidy plot data: `ticker,date,model,actual,predicted`.
pub fn write_plot_data<W: Write>(w: W, rows: &[PredictionLine]) -> Result<(), CliError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["ticker", "date", "model", "actual", "predicted"])?;
    for r in rows {
        out.write_record([
            r.ticker.clone(),
            r.date.format("%Y-%m-%d").to_string(),
            r.model.clone(),
            r.actual.to_string(),
            r.predicted.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Standardized,
    Raw,
}

impl Scale {
    fn as_str(self) -> &'static str {
        match self {
            Scale::Standardized => "standardized",
            Scale::Raw => "raw",
        }
    }

    fn pick(self, c: &CellStats) -> (Summary, Summary) {
        match self {
            Scale::Standardized => (c.mse, c.mae),
            Scale::Raw => (c.raw_mse, c.raw_mae),
        }
    }
}

/// Run identity stamped on every report.
#[derive(Debug, Clone)]
pub struct Stamp {
    pub fingerprint: String,
    pub seed: u64,
}

fn table_title(regime: RegimeLabel) -> &'static str {
    match regime {
        RegimeLabel::Stable => "Table 1. Evaluation of Models for Stable Companies",
        RegimeLabel::Volatile => "Table 2. Evaluation of Models for Volatile Companies",
    }
}

fn pm(s: &Summary) -> String {
    format!("{:.6} ± {:.6}", s.mean, s.std)
}

fn render_table(out: &mut String, rep: &StratifiedReport, regime: RegimeLabel, horizon: usize, scale: Scale) {
    let count = ModelKind::ALL.iter().filter_map(|&m| rep.get(regime, m, horizon)).map(|c| c.count).max().unwrap_or(0);
    let _ = writeln!(out, "horizon {horizon}, {} scale, mean ± std over firms and folds, n = {count}", scale.as_str());
    let _ = writeln!(out, "{:<20}  {:<22}  {:<22}", "Model", "MSE", "MAE");
    for m in ModelKind::ALL {
        match rep.get(regime, m, horizon) {
            Some(c) => {
                let (mse, mae) = scale.pick(c);
                let _ = writeln!(out, "{:<20}  {:<22}  {:<22}", m.table_label(), pm(&mse), pm(&mae));
            }
            None => {
                let _ = writeln!(out, "{:<20}  {:<22}  {:<22}", m.table_label(), "-", "-");
            }
        }
    }
    if let Some(line) = improvement_line(rep, regime, horizon, scale) {
        let _ = writeln!(out, "{line}");
    }
}

fn improvement_line(rep: &StratifiedReport, regime: RegimeLabel, horizon: usize, scale: Scale) -> Option<String> {
    let get = |m| rep.get(regime, m, horizon).map(|c| scale.pick(c));
    let (moe, lin, lstm) = (get(ModelKind::Moe)?, get(ModelKind::Linear)?, get(ModelKind::Lstm)?);
    let best_mse = lin.0.mean.min(lstm.0.mean);
    let best_mae = lin.1.mean.min(lstm.1.mean);
    let mse = improvement_pct(moe.0.mean, best_mse).ok()?;
    let mae = improvement_pct(moe.1.mean, best_mae).ok()?;
    Some(format!("MoE gain over best expert: MSE {mse:+.2}%, MAE {mae:+.2}%"))
}

fn horizons_of(records: &[MetricRecord]) -> Vec<usize> {
    let mut hs: Vec<usize> = records.iter().map(|r| r.horizon).collect();
    hs.sort_unstable();
    hs.dedup();
    hs
}

/// Plain-text report: regime tables at horizon 1, then every horizon on both scales.
pub fn render_text(stamp: &Stamp, config_text: &str, records: &[MetricRecord]) -> String {
    let wf: Vec<MetricRecord> = records.iter().filter(|r| r.source == RecordSource::WalkForward).cloned().collect();
    let ho: Vec<MetricRecord> = records.iter().filter(|r| r.source == RecordSource::Holdout).cloned().collect();
    let mut out = String::new();
    let _ = writeln!(out, "volmoe report");
    let _ = writeln!(out, "fingerprint: {}", stamp.fingerprint);
    let _ = writeln!(out, "seed: {}", stamp.seed);
    let _ = writeln!(out, "records: {} walk-forward, {} holdout", wf.len(), ho.len());
    out.push('\n');

    let rep = aggregate_stratified(&wf);
    for regime in [RegimeLabel::Stable, RegimeLabel::Volatile] {
        let _ = writeln!(out, "{}", table_title(regime));
        render_table(&mut out, &rep, regime, 1, Scale::Standardized);
        out.push('\n');
    }

    let _ = writeln!(out, "Walk-forward breakdown by horizon");
    for scale in [Scale::Standardized, Scale::Raw] {
        for h in horizons_of(&wf) {
            for regime in [RegimeLabel::Stable, RegimeLabel::Volatile] {
                let _ = writeln!(out, "[{regime}]");
                render_table(&mut out, &rep, regime, h, scale);
                out.push('\n');
            }
        }
    }

    if !ho.is_empty() {
        let rep = aggregate_stratified(&ho);
        let _ = writeln!(out, "Holdout firms, frozen pooled models");
        for h in horizons_of(&ho) {
            for regime in [RegimeLabel::Stable, RegimeLabel::Volatile] {
                let _ = writeln!(out, "[{regime}]");
                render_table(&mut out, &rep, regime, h, Scale::Standardized);
                out.push('\n');
            }
        }
    }

    let _ = writeln!(out, "Resolved configuration");
    out.push_str(config_text);
    out
}

/// Table-shaped CSV for one regime at horizon 1.
pub fn table_csv(stamp: &Stamp, records: &[MetricRecord], regime: RegimeLabel) -> Result<Vec<u8>, CliError> {
    let wf: Vec<&MetricRecord> = records.iter().filter(|r| r.source == RecordSource::WalkForward).collect();
    let rep = aggregate_stratified(wf);
    let mut out = csv::Writer::from_writer(Vec::new());
    out.write_record(["Model", "MSE", "MAE", "MSE_std", "MAE_std", "n", "fingerprint", "seed"])?;
    for m in ModelKind::ALL {
        if let Some(c) = rep.get(regime, m, 1) {
            out.write_record([
                m.table_label().to_string(),
                c.mse.mean.to_string(),
                c.mae.mean.to_string(),
                c.mse.std.to_string(),
                c.mae.std.to_string(),
                c.count.to_string(),
                stamp.fingerprint.clone(),
                stamp.seed.to_string(),
            ])?;
        }
    }
    out.into_inner().map_err(|e| CliError::Io(e.into_error()))
}

fn opt(s: Option<Summary>) -> (String, String) {
    s.map_or((String::new(), String::new()), |s| (s.mean.to_string(), s.std.to_string()))
}

/// Every (source, regime, model, horizon) cell on both scales.
pub fn summary_csv(stamp: &Stamp, records: &[MetricRecord]) -> Result<Vec<u8>, CliError> {
    let mut out = csv::Writer::from_writer(Vec::new());
    out.write_record([
        "source",
        "regime",
        "model",
        "horizon",
        "n",
        "mse_mean",
        "mse_std",
        "mae_mean",
        "mae_std",
        "rmse_mean",
        "rmse_std",
        "mase_mean",
        "mase_std",
        "raw_mse_mean",
        "raw_mse_std",
        "raw_mae_mean",
        "raw_mae_std",
        "fingerprint",
        "seed",
    ])?;
    for source in [RecordSource::WalkForward, RecordSource::Holdout] {
        let subset: Vec<&MetricRecord> = records.iter().filter(|r| r.source == source).collect();
        for (key, c) in aggregate_stratified(subset).cells {
            let mase = opt(c.mase);
            out.write_record([
                source.as_str().to_string(),
                key.regime.as_str().to_string(),
                key.model.as_str().to_string(),
                key.horizon.to_string(),
                c.count.to_string(),
                c.mse.mean.to_string(),
                c.mse.std.to_string(),
                c.mae.mean.to_string(),
                c.mae.std.to_string(),
                c.rmse.mean.to_string(),
                c.rmse.std.to_string(),
                mase.0,
                mase.1,
                c.raw_mse.mean.to_string(),
                c.raw_mse.std.to_string(),
                c.raw_mae.mean.to_string(),
                c.raw_mae.std.to_string(),
                stamp.fingerprint.clone(),
                stamp.seed.to_string(),
            ])?;
        }
    }
    out.into_inner().map_err(|e| CliError::Io(e.into_error()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use volmoe_core::evaluation::RecordTag;
    use volmoe_core::Scaler;

    fn rec(regime: RegimeLabel, model: ModelKind, err: f64, source: RecordSource) -> MetricRecord {
        let tag = RecordTag { source, ticker: "A", fold_id: 0, regime, horizon: 1 };
        MetricRecord::score(&tag, model, &[err, 0.0], &[0.0, 0.0], &[0.0, 1.0, 0.0], &Scaler { mean: 5.0, std: 2.0 })
            .unwrap()
    }

    fn sample() -> Vec<MetricRecord> {
        let mut v = Vec::new();
        for (regime, errs) in [(RegimeLabel::Stable, [0.1, 0.3, 0.05]), (RegimeLabel::Volatile, [0.9, 0.6, 0.5])] {
            for (m, e) in ModelKind::ALL.into_iter().zip(errs) {
                v.push(rec(regime, m, e, RecordSource::WalkForward));
            }
        }
        v.push(rec(RegimeLabel::Volatile, ModelKind::Moe, 0.2, RecordSource::Holdout));
        v
    }

    #[test]
    fn records_round_trip_exactly() {
        let recs = sample();
        let mut buf = Vec::new();
        write_records(&mut buf, &recs).unwrap();
        assert_eq!(read_records(buf.as_slice()).unwrap(), recs);
    }

    #[test]
    fn text_has_both_tables_and_stamp() {
        let stamp = Stamp { fingerprint: "f".repeat(64), seed: 9 };
        let text = render_text(&stamp, "seed = 9\n", &sample());
        for needle in [
            "Table 1. Evaluation of Models for Stable Companies",
            "Table 2. Evaluation of Models for Volatile Companies",
            "Linear Regression",
            "LSTM (RNN)",
            "Mixture of Experts",
            "fingerprint: ffff",
            "seed: 9",
            "Holdout firms",
            "raw scale",
        ] {
            assert!(text.contains(needle), "missing {needle}");
        }
    }

    #[test]
    fn table_csv_shape() {
        let stamp = Stamp { fingerprint: "0".repeat(64), seed: 1 };
        let bytes = table_csv(&stamp, &sample(), RegimeLabel::Stable).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[0].starts_with("Model,MSE,MAE"));
        let f: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(f[0], "Linear Regression");
        assert!((f[1].parse::<f64>().unwrap() - 0.005).abs() < 1e-15);
        assert!((f[2].parse::<f64>().unwrap() - 0.05).abs() < 1e-15);
        assert_eq!(f[5], "1");
        let summary = String::from_utf8(summary_csv(&stamp, &sample()).unwrap()).unwrap();
        assert_eq!(summary.lines().count(), 1 + 6 + 1);
    }
}
