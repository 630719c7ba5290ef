use crate::{Error, Result};

fn check(preds: &[f64], targets: &[f64]) -> Result<()> {
    if preds.len() != targets.len() {
        return Err(Error::LengthMismatch { left: preds.len(), right: targets.len() });
    }
    if preds.is_empty() {
        return Err(Error::Empty("metric inputs"));
    }
    Ok(())
}

pub fn mse(preds: &[f64], targets: &[f64]) -> Result<f64> {
    check(preds, targets)?;
    Ok(preds.iter().zip(targets).map(|(p, y)| (p - y).powi(2)).sum::<f64>() / preds.len() as f64)
}

pub fn mae(preds: &[f64], targets: &[f64]) -> Result<f64> {
    check(preds, targets)?;
    Ok(preds.iter().zip(targets).map(|(p, y)| (p - y).abs()).sum::<f64>() / preds.len() as f64)
}

pub fn rmse(preds: &[f64], targets: &[f64]) -> Result<f64> {
    mse(preds, targets).map(f64::sqrt)
}

/// MAE scaled by the in-sample MAE of the one-step naive forecast on `train_targets`.
pub fn mase(preds: &[f64], targets: &[f64], train_targets: &[f64]) -> Result<f64> {
    if train_targets.len() < 2 {
        return Err(Error::SeriesTooShort { needed: 2, got: train_targets.len() });
    }
    let naive = train_targets.windows(2).map(|w| (w[1] - w[0]).abs()).sum::<f64>() / (train_targets.len() - 1) as f64;
    if !(naive > 0.0) {
        return Err(Error::ZeroNaiveScale);
    }
    Ok(mae(preds, targets)? / naive)
}

/// Percentage reduction of `candidate` relative to `baseline`.
pub fn improvement_pct(candidate: f64, baseline: f64) -> Result<f64> {
    if !(baseline > 0.0) {
        return Err(Error::InvalidArgument(format!("baseline must be positive, got {baseline}")));
    }
    Ok((baseline - candidate) / baseline * 100.0)
}
