//! Fixed regime-keyed gate and the convex combination of expert predictions.

use serde::{Deserialize, Serialize};

use crate::expert_linear::{predict_linear, LinearParams};
use crate::expert_lstm::{predict_lstm, LstmParams};
use crate::regime::RegimeLabel;
use crate::{Error, Result};

const WEIGHT_TOLERANCE: f64 = 1e-12;

/// `w_lm` is stored as `1 - w_rnn`, so the pair always sums to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateWeights {
    pub w_rnn: f64,
    pub w_lm: f64,
}

impl GateWeights {
    pub fn new(w_rnn: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&w_rnn) {
            return Err(Error::InvalidWeights { sum: w_rnn });
        }
        Ok(Self { w_rnn, w_lm: 1.0 - w_rnn })
    }

    /// The same pair with the experts exchanged.
    pub fn swapped(self) -> Self {
        Self { w_rnn: self.w_lm, w_lm: self.w_rnn }
    }
}

/// Gate weights per regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateTable {
    pub volatile: GateWeights,
    pub stable: GateWeights,
}

impl Default for GateTable {
    fn default() -> Self {
        Self { volatile: GateWeights { w_rnn: 0.7, w_lm: 0.3 }, stable: GateWeights { w_rnn: 0.3, w_lm: 0.7 } }
    }
}

impl GateTable {
    pub fn from_rnn_weights(volatile_w_rnn: f64, stable_w_rnn: f64) -> Result<Self> {
        Ok(Self { volatile: GateWeights::new(volatile_w_rnn)?, stable: GateWeights::new(stable_w_rnn)? })
    }

    pub fn gate_for_regime(&self, regime: RegimeLabel) -> GateWeights {
        match regime {
            RegimeLabel::Volatile => self.volatile,
            RegimeLabel::Stable => self.stable,
        }
    }
}

/// Default gate: 0.7 on the LSTM for volatile firms, 0.7 on the linear model for stable ones.
pub fn gate_for_regime(regime: RegimeLabel) -> GateWeights {
    GateTable::default().gate_for_regime(regime)
}

/// `Σ wᵢ·ŷᵢ` over `(weight, prediction)` pairs whose weights are non-negative and sum to one.
pub fn combine(expert_preds: &[(f64, f64)]) -> Result<f64> {
    if expert_preds.is_empty() {
        return Err(Error::Empty("expert list"));
    }
    let sum: f64 = expert_preds.iter().map(|(w, _)| w).sum();
    if expert_preds.iter().any(|(w, _)| !(*w >= 0.0)) || (sum - 1.0).abs() > WEIGHT_TOLERANCE {
        return Err(Error::InvalidWeights { sum });
    }
    Ok(expert_preds.iter().map(|(w, p)| w * p).sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoePrediction {
    pub combined: f64,
    pub rnn_component: f64,
    pub lm_component: f64,
    pub weights: GateWeights,
    pub regime: RegimeLabel,
}

impl MoePrediction {
    pub fn from_components(rnn: f64, lm: f64, weights: GateWeights, regime: RegimeLabel) -> Self {
        Self {
            combined: weights.w_rnn * rnn + weights.w_lm * lm,
            rnn_component: rnn,
            lm_component: lm,
            weights,
            regime,
        }
    }
}

/// Evaluates both experts and blends them with the gate for `regime`.
#[allow(clippy::too_many_arguments)]
pub fn predict_moe(
    lstm: &LstmParams,
    linear: &LinearParams,
    gates: &GateTable,
    window: &[f64],
    t: f64,
    sigma: f64,
    regime: RegimeLabel,
) -> Result<MoePrediction> {
    let rnn = predict_lstm(lstm, window)?;
    let lm = predict_linear(linear, t, sigma);
    Ok(MoePrediction::from_components(rnn, lm, gates.gate_for_regime(regime), regime))
}
