//! Stable-regime expert: ordinary least squares of the target on an intercept,
//! the time index and the rolling volatility.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearParams {
    pub beta0: f64,
    pub beta1: f64,
    pub beta2: f64,
}

impl LinearParams {
    pub const ZERO: LinearParams = LinearParams { beta0: 0.0, beta1: 0.0, beta2: 0.0 };
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFitReport {
    pub params: LinearParams,
    pub rss: f64,
    pub n: usize,
}

/// Largest tolerated ratio between the extreme pivots of the equilibrated normal matrix.
pub const MAX_PIVOT_RATIO: f64 = 1e10;

const COLUMNS: [&str; 3] = ["intercept", "t", "sigma"];

pub fn predict_linear(params: &LinearParams, t: f64, sigma: f64) -> f64 {
    params.beta0 + params.beta1 * t + params.beta2 * sigma
}

/// LDLᵀ pivots of the normal matrix `XᵀX` after symmetric diagonal scaling to unit diagonal.
#[allow(clippy::needless_range_loop)]
fn equilibrated_pivots(cols: [&[f64]; 3]) -> [f64; 3] {
    let mut g = [[0.0f64; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            g[i][j] = cols[i].iter().zip(cols[j]).map(|(a, b)| a * b).sum();
        }
    }
    let d: Vec<f64> = (0..3).map(|i| g[i][i].sqrt()).collect();
    if d.contains(&0.0) {
        let zero = d.iter().position(|&x| x == 0.0).unwrap();
        let mut p = [1.0; 3];
        p[zero] = 0.0;
        return p;
    }
    for i in 0..3 {
        for j in 0..3 {
            g[i][j] /= d[i] * d[j];
        }
    }
    // Unpivoted LDLᵀ; the diagonal after elimination is the pivot sequence.
    let mut pivots = [0.0; 3];
    for k in 0..3 {
        pivots[k] = g[k][k];
        if pivots[k] <= 0.0 {
            pivots[k] = 0.0;
            break;
        }
        for i in k + 1..3 {
            let l = g[i][k] / g[k][k];
            for j in k + 1..3 {
                g[i][j] -= l * g[k][j];
            }
        }
    }
    pivots
}

/// Least-squares fit of `y ≈ β₀ + β₁·t + β₂·σ`.
///
/// Rejects designs whose equilibrated normal matrix has a pivot ratio above
/// [`MAX_PIVOT_RATIO`], naming the column whose pivot collapsed.
pub fn fit_ols(t: &[f64], sigma: &[f64], y: &[f64]) -> Result<LinearFitReport> {
    if t.len() != y.len() {
        return Err(Error::LengthMismatch { left: t.len(), right: y.len() });
    }
    if sigma.len() != y.len() {
        return Err(Error::LengthMismatch { left: sigma.len(), right: y.len() });
    }
    let n = y.len();
    if n < 3 {
        return Err(Error::SeriesTooShort { needed: 3, got: n });
    }
    if t.iter().chain(sigma).chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite value in regression data".into()));
    }

    let ones = vec![1.0; n];
    let pivots = equilibrated_pivots([&ones, t, sigma]);
    let max = pivots.iter().cloned().fold(0.0, f64::max);
    for (k, &p) in pivots.iter().enumerate() {
        if p <= 0.0 || max / p > MAX_PIVOT_RATIO {
            return Err(Error::RankDeficient { column: COLUMNS[k] });
        }
    }

    // Solve in centered coordinates: the intercept decouples and a 2×2 system remains.
    let nf = n as f64;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / nf;
    let (mt, ms, my) = (mean(t), mean(sigma), mean(y));
    let (mut stt, mut sss, mut sts, mut sty, mut ssy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for k in 0..n {
        let (dt, ds, dy) = (t[k] - mt, sigma[k] - ms, y[k] - my);
        stt += dt * dt;
        sss += ds * ds;
        sts += dt * ds;
        sty += dt * dy;
        ssy += ds * dy;
    }
    let det = stt * sss - sts * sts;
    if !(det > 0.0) {
        return Err(Error::RankDeficient { column: "sigma" });
    }
    let beta1 = (sty * sss - ssy * sts) / det;
    let beta2 = (ssy * stt - sty * sts) / det;
    let beta0 = my - beta1 * mt - beta2 * ms;
    let params = LinearParams { beta0, beta1, beta2 };
    if ![beta0, beta1, beta2].iter().all(|b| b.is_finite()) {
        return Err(Error::RankDeficient { column: "sigma" });
    }

    let rss = (0..n).map(|k| (y[k] - predict_linear(&params, t[k], sigma[k])).powi(2)).sum();
    Ok(LinearFitReport { params, rss, n })
}
