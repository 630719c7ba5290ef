use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Mean/standard-deviation standardizer. A zero-variance fit stores `std = 1`,
/// so standardization degenerates to mean-centering.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: f64,
    pub std: f64,
}

impl Scaler {
    pub const IDENTITY: Scaler = Scaler { mean: 0.0, std: 1.0 };

    pub fn apply(&self, x: f64) -> f64 {
        (x - self.mean) / self.std
    }

    pub fn invert(&self, z: f64) -> f64 {
        z * self.std + self.mean
    }

    /// Converts a difference in standardized units back to source units.
    pub fn invert_scale(&self, dz: f64) -> f64 {
        dz * self.std
    }
}

/// Sample mean and standard deviation (divisor `n - 1`) of `values`.
pub fn fit_scaler(values: &[f64]) -> Result<Scaler> {
    if values.is_empty() {
        return Err(Error::Empty("scaler input"));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    let std = if std > 0.0 { std } else { 1.0 };
    Ok(Scaler { mean, std })
}
