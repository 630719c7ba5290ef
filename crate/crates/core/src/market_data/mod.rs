//! Price ingestion and the transforms feeding both experts: returns, rolling
//! volatility, training-portion standardization and supervised windows.

mod csv_io;
mod returns;
mod scaling;
pub mod synthetic;
mod windows;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use csv_io::{load_csv, read_csv, write_csv};
pub use returns::{log_returns, rolling_volatility, simple_returns};
pub use scaling::{fit_scaler, Scaler};
pub use synthetic::{generate_synthetic, FirmKind, SyntheticSpec};
pub use windows::{make_windows, make_windows_in, WindowSample, WindowedDataset};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PricePoint {
    pub date: NaiveDate,
    pub adj_close: f64,
}

/// One firm's adjusted closes, strictly increasing in date, all prices positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSeries {
    pub ticker: String,
    points: Vec<PricePoint>,
}

impl PriceSeries {
    pub fn new(ticker: impl Into<String>, points: Vec<PricePoint>) -> Result<Self> {
        let ticker = ticker.into();
        for (k, p) in points.iter().enumerate() {
            if !(p.adj_close > 0.0) || !p.adj_close.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "{ticker}: price at position {k} is not a positive finite number ({})",
                    p.adj_close
                )));
            }
        }
        if let Some(k) = points.windows(2).position(|w| w[1].date <= w[0].date) {
            return Err(Error::InvalidArgument(format!(
                "{ticker}: dates not strictly increasing at position {}",
                k + 1
            )));
        }
        Ok(Self { ticker, points })
    }

    /// Builds a series from bare prices, dated on consecutive weekdays from 2015-01-02.
    pub fn from_prices(ticker: impl Into<String>, prices: &[f64]) -> Result<Self> {
        let dates = trading_days(NaiveDate::from_ymd_opt(2015, 1, 2).unwrap(), prices.len());
        let points = dates.into_iter().zip(prices).map(|(date, &adj_close)| PricePoint { date, adj_close }).collect();
        Self::new(ticker, points)
    }

    pub fn points(&self) -> &[PricePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn prices(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.adj_close).collect()
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        self.points.iter().map(|p| p.date).collect()
    }
}

/// `count` consecutive Monday-to-Friday dates starting at `start` (or the next weekday).
pub fn trading_days(start: NaiveDate, count: usize) -> Vec<NaiveDate> {
    use chrono::{Datelike, Weekday};
    let mut out = Vec::with_capacity(count);
    let mut d = start;
    while out.len() < count {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d = d.succ_opt().expect("date overflow");
    }
    out
}

/// What the supervised windows are built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum DataMode {
    /// Standardized adjusted closes.
    #[default]
    PriceLevels,
    /// Standardized daily log-returns.
    LogReturns,
}

impl DataMode {
    pub fn as_str(self) -> &'static str {
        match self {
            DataMode::PriceLevels => "prices",
            DataMode::LogReturns => "log_returns",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReturnKind {
    Simple,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnSeries {
    pub ticker: String,
    pub values: Vec<f64>,
    pub kind: ReturnKind,
}

/// Trailing sample standard deviations of returns.
///
/// `values[j]` covers returns `j ..= j + window - 1`, so it is aligned to return
/// index `j + window - 1`, which is price index `j + window`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolatilitySeries {
    pub ticker: String,
    pub window: usize,
    pub values: Vec<f64>,
}

impl VolatilitySeries {
    /// First return index with a defined volatility.
    pub fn first_index(&self) -> usize {
        self.window - 1
    }

    pub fn last_index(&self) -> usize {
        self.window - 1 + self.values.len().saturating_sub(1)
    }

    /// Volatility aligned to return index `index`.
    pub fn at(&self, index: usize) -> Result<f64> {
        if self.values.is_empty() || index < self.first_index() || index > self.last_index() {
            return Err(Error::IndexOutOfRange { index, first: self.first_index(), last: self.last_index() });
        }
        Ok(self.values[index - self.first_index()])
    }

    /// Volatility known at the close of price index `price_index`.
    pub fn at_price_index(&self, price_index: usize) -> Option<f64> {
        price_index.checked_sub(1).and_then(|k| self.at(k).ok())
    }

    pub fn mean(&self) -> Option<f64> {
        if self.values.is_empty() {
            None
        } else {
            Some(self.values.iter().sum::<f64>() / self.values.len() as f64)
        }
    }
}
