use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::{fit_scaler, DataMode, Scaler};
use crate::{Error, Result};

/// `inputs` are the `w` standardized values preceding `t_index`; `target` is the
/// standardized value at `t_index`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSample {
    pub inputs: Vec<f64>,
    pub target: f64,
    pub t_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowedDataset {
    pub ticker: String,
    pub samples: Vec<WindowSample>,
    pub scaler: Scaler,
    pub mode: DataMode,
    pub window: usize,
}

impl WindowedDataset {
    /// Samples whose target index lies in `range`.
    pub fn targets_in(&self, range: Range<usize>) -> impl Iterator<Item = &WindowSample> {
        self.samples.iter().filter(move |s| range.contains(&s.t_index))
    }
}

/// Overlapping windows over `values`, standardized with statistics of `values[..train_end]`.
pub fn make_windows(
    ticker: &str,
    values: &[f64],
    w: usize,
    mode: DataMode,
    train_end: usize,
) -> Result<WindowedDataset> {
    if train_end < w + 1 {
        return Err(Error::InvalidArgument(format!(
            "train_end {train_end} leaves no complete training window of length {w}"
        )));
    }
    make_windows_in(ticker, values, w, mode, 0..train_end)
}

/// Like [`make_windows`], with the scaler fitted on `values[fit_range]` only.
pub fn make_windows_in(
    ticker: &str,
    values: &[f64],
    w: usize,
    mode: DataMode,
    fit_range: Range<usize>,
) -> Result<WindowedDataset> {
    if w == 0 {
        return Err(Error::InvalidArgument("window length must be positive".into()));
    }
    if values.len() < w + 1 {
        return Err(Error::SeriesTooShort { needed: w + 1, got: values.len() });
    }
    if fit_range.end > values.len() || fit_range.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "scaler range {fit_range:?} invalid for series of length {}",
            values.len()
        )));
    }
    let scaler = fit_scaler(&values[fit_range])?;
    let z: Vec<f64> = values.iter().map(|&v| scaler.apply(v)).collect();
    let samples =
        (w..z.len()).map(|t| WindowSample { inputs: z[t - w..t].to_vec(), target: z[t], t_index: t }).collect();
    Ok(WindowedDataset { ticker: ticker.to_string(), samples, scaler, mode, window: w })
}
