//! Volatile/Stable classification of firms.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::market_data::VolatilitySeries;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RegimeLabel {
    Stable,
    Volatile,
}

impl RegimeLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            RegimeLabel::Stable => "stable",
            RegimeLabel::Volatile => "volatile",
        }
    }

    pub fn other(self) -> Self {
        match self {
            RegimeLabel::Stable => RegimeLabel::Volatile,
            RegimeLabel::Volatile => RegimeLabel::Stable,
        }
    }
}

impl fmt::Display for RegimeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RegimePolicy {
    /// Volatile iff the firm's own rolling volatility exceeds `tau`.
    Threshold { vol_window: usize, tau: f64 },
    /// Volatile iff the firm's volatility exceeds the cross-sectional median.
    CrossSectionalMedian { vol_window: usize },
}

impl RegimePolicy {
    pub const DEFAULT_TAU: f64 = 0.025;

    pub fn threshold() -> Self {
        RegimePolicy::Threshold { vol_window: 30, tau: Self::DEFAULT_TAU }
    }

    pub fn median() -> Self {
        RegimePolicy::CrossSectionalMedian { vol_window: 21 }
    }

    pub fn vol_window(&self) -> usize {
        match *self {
            RegimePolicy::Threshold { vol_window, .. } | RegimePolicy::CrossSectionalMedian { vol_window } => {
                vol_window
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.vol_window() < 2 {
            return Err(Error::InvalidArgument("volatility window must be >= 2".into()));
        }
        if let RegimePolicy::Threshold { tau, .. } = *self {
            if !(tau > 0.0) {
                return Err(Error::InvalidArgument(format!("threshold tau must be positive, got {tau}")));
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            RegimePolicy::Threshold { .. } => "threshold",
            RegimePolicy::CrossSectionalMedian { .. } => "median",
        }
    }
}

/// Labels of one fold's universe and where they came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeAssignment {
    pub fold_id: usize,
    pub labels: BTreeMap<String, RegimeLabel>,
    pub policy: RegimePolicy,
    /// Price index whose close is the last observation entering the volatility.
    pub as_of_index: usize,
}

pub fn classify_threshold(vol: &VolatilitySeries, at: usize, tau: f64) -> Result<RegimeLabel> {
    Ok(label_threshold(vol.at(at)?, tau))
}

fn label_threshold(sigma: f64, tau: f64) -> RegimeLabel {
    if sigma > tau {
        RegimeLabel::Volatile
    } else {
        RegimeLabel::Stable
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Volatile iff strictly above the cross-sectional median; ties go to Stable.
pub fn classify_median<'a>(vols: impl IntoIterator<Item = (&'a str, f64)>) -> Result<BTreeMap<String, RegimeLabel>> {
    let mut map = BTreeMap::new();
    for (ticker, sigma) in vols {
        if map.insert(ticker.to_string(), sigma).is_some() {
            return Err(Error::InvalidArgument(format!("ticker {ticker} appears twice")));
        }
    }
    if map.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "median classification needs at least 2 tickers, got {}",
            map.len()
        )));
    }
    let mut values: Vec<f64> = map.values().copied().collect();
    let m = median(&mut values);
    Ok(map.into_iter().map(|(t, s)| (t, label_threshold(s, m))).collect())
}

/// Classifies every firm under `policy` using volatility known at the close of
/// price index `as_of_index`.
pub fn assign_regimes(
    fold_id: usize,
    vols: &BTreeMap<String, VolatilitySeries>,
    as_of_index: usize,
    policy: RegimePolicy,
) -> Result<RegimeAssignment> {
    let sigma_at = |v: &VolatilitySeries| {
        v.at_price_index(as_of_index).ok_or_else(|| {
            Error::InvalidArgument(format!("{}: no {}-day volatility at price index {as_of_index}", v.ticker, v.window))
        })
    };
    let labels = match policy {
        RegimePolicy::Threshold { tau, .. } => {
            vols.iter().map(|(t, v)| Ok((t.clone(), label_threshold(sigma_at(v)?, tau)))).collect::<Result<_>>()?
        }
        RegimePolicy::CrossSectionalMedian { .. } => {
            let sigmas: Vec<(&str, f64)> =
                vols.iter().map(|(t, v)| Ok((t.as_str(), sigma_at(v)?))).collect::<Result<_>>()?;
            classify_median(sigmas)?
        }
    };
    Ok(RegimeAssignment { fold_id, labels, policy, as_of_index })
}

/// The `k` most and `k` least volatile tickers. Ties break on ticker order.
pub fn rank_by_volatility<'a>(
    vols: impl IntoIterator<Item = (&'a str, f64)>,
    k: usize,
) -> Result<(Vec<String>, Vec<String>)> {
    let mut ranked: Vec<(&str, f64)> = vols.into_iter().collect();
    if 2 * k > ranked.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot pick {k} most and {k} least volatile from {} firms",
            ranked.len()
        )));
    }
    ranked.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(b.0)));
    let bottom = ranked[..k].iter().map(|(t, _)| t.to_string()).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let top = ranked[..k].iter().map(|(t, _)| t.to_string()).collect();
    Ok((top, bottom))
}
