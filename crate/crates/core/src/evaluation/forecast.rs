use crate::expert_linear::{predict_linear, LinearParams};
use crate::expert_lstm::{predict_lstm, LstmParams};
use crate::moe::{GateTable, MoePrediction};
use crate::regime::RegimeLabel;
use crate::{Error, Result};

/// Side information available when a forecast is launched.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepContext {
    /// Time index of the first predicted step.
    pub t: f64,
    /// Last observed rolling volatility; held fixed over the horizon.
    pub sigma: f64,
    pub regime: RegimeLabel,
}

/// A one-step-ahead predictor in standardized units.
pub trait Forecaster {
    fn predict_next(&self, window: &[f64], t: f64, sigma: f64) -> Result<f64>;
}

impl Forecaster for LinearParams {
    fn predict_next(&self, _window: &[f64], t: f64, sigma: f64) -> Result<f64> {
        Ok(predict_linear(self, t, sigma))
    }
}

impl Forecaster for LstmParams {
    fn predict_next(&self, window: &[f64], _t: f64, _sigma: f64) -> Result<f64> {
        predict_lstm(self, window)
    }
}

/// Feeds each prediction back into the window (dropping the oldest value) and
/// advances the time index by one per step.
pub fn recursive_forecast<F: Forecaster + ?Sized>(
    model: &F,
    last_window: &[f64],
    ctx: &StepContext,
    h: usize,
) -> Result<Vec<f64>> {
    if h < 1 {
        return Err(Error::InvalidArgument("forecast horizon must be at least 1".into()));
    }
    if last_window.is_empty() {
        return Err(Error::Empty("forecast window"));
    }
    let mut window = last_window.to_vec();
    let mut out = Vec::with_capacity(h);
    for j in 0..h {
        let p = model.predict_next(&window, ctx.t + j as f64, ctx.sigma)?;
        out.push(p);
        window.remove(0);
        window.push(p);
    }
    Ok(out)
}

/// Each expert runs its own recursion on its own predictions; the gate blends
/// the two paths step by step.
pub fn moe_recursive_forecast(
    lstm: &LstmParams,
    linear: &LinearParams,
    gates: &GateTable,
    last_window: &[f64],
    ctx: &StepContext,
    h: usize,
) -> Result<Vec<MoePrediction>> {
    let rnn = recursive_forecast(lstm, last_window, ctx, h)?;
    let lm = recursive_forecast(linear, last_window, ctx, h)?;
    let weights = gates.gate_for_regime(ctx.regime);
    Ok(rnn.into_iter().zip(lm).map(|(r, l)| MoePrediction::from_components(r, l, weights, ctx.regime)).collect())
}
