//! Seeded synthetic universes with known regimes.
//!
//! Stable firms follow a linear price trend plus small Gaussian noise. Volatile
//! firms follow a log-price trend plus a nonlinear autoregressive deviation
//! `x[t] = a·x[t-1] + b·sin(ω·x[t-1]) + ε` with large innovations. The default
//! noise scales keep the 30-day rolling volatility of simple returns below
//! 0.025 for stable firms and above it for volatile firms on nearly every day.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{trading_days, PricePoint, PriceSeries};
use crate::seed::task_seed;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FirmKind {
    Stable,
    Volatile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_stable: usize,
    pub n_volatile: usize,
    pub length: usize,
    /// Noise standard deviation of stable firms, as a fraction of the initial price.
    pub stable_noise: f64,
    /// Innovation standard deviation of the volatile log-price deviation.
    pub volatile_noise: f64,
    /// Linear autoregressive coefficient `a` of the volatile deviation.
    pub volatile_ar: f64,
    /// Amplitude `b` of the sine term.
    pub volatile_sine_amplitude: f64,
    /// Frequency `ω` of the sine term.
    pub volatile_sine_frequency: f64,
    /// Upper bound of the per-firm daily log drift of volatile firms (drawn from `±bound`).
    pub volatile_drift: f64,
    pub start: NaiveDate,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_stable: 8,
            n_volatile: 8,
            length: 300,
            stable_noise: 0.004,
            volatile_noise: 0.04,
            volatile_ar: 0.5,
            volatile_sine_amplitude: 0.03,
            volatile_sine_frequency: 10.0,
            volatile_drift: 0.001,
            start: NaiveDate::from_ymd_opt(2015, 1, 2).unwrap(),
        }
    }
}

impl SyntheticSpec {
    /// Tickers in generation order: `STB01..`, then `VOL01..`.
    pub fn firms(&self) -> Vec<(String, FirmKind)> {
        let stable = (1..=self.n_stable).map(|i| (format!("STB{i:02}"), FirmKind::Stable));
        let volatile = (1..=self.n_volatile).map(|i| (format!("VOL{i:02}"), FirmKind::Volatile));
        stable.chain(volatile).collect()
    }
}

fn stable_path(rng: &mut ChaCha8Rng, n: usize, noise: f64) -> Vec<f64> {
    let p0: f64 = rng.random_range(50.0..150.0);
    let slope = p0 * rng.random_range(0.0005..0.003);
    let normal = Normal::new(0.0, noise * p0).expect("finite noise");
    (0..n)
        .map(|t| {
            let eps = if noise > 0.0 { normal.sample(rng) } else { 0.0 };
            p0 + slope * t as f64 + eps
        })
        .collect()
}

fn volatile_path(rng: &mut ChaCha8Rng, spec: &SyntheticSpec) -> Vec<f64> {
    let (n, noise) = (spec.length, spec.volatile_noise);
    let p0: f64 = rng.random_range(50.0..150.0);
    let drift: f64 =
        if spec.volatile_drift > 0.0 { rng.random_range(-spec.volatile_drift..spec.volatile_drift) } else { 0.0 };
    let normal = Normal::new(0.0, noise).expect("finite noise");
    let mut x = 0.0f64;
    (0..n)
        .map(|t| {
            if t > 0 {
                let eps = if noise > 0.0 { normal.sample(rng) } else { 0.0 };
                x = spec.volatile_ar * x
                    + spec.volatile_sine_amplitude * (spec.volatile_sine_frequency * x).sin()
                    + eps;
            }
            p0 * (drift * t as f64 + x).exp()
        })
        .collect()
}

/// Generates the universe described by `spec`. Each firm draws from its own
/// stream keyed by `(seed, ticker)`, so adding firms never perturbs existing ones.
pub fn generate_synthetic(spec: &SyntheticSpec, seed: u64) -> Result<BTreeMap<String, PriceSeries>> {
    if spec.length == 0 {
        return Err(Error::InvalidArgument("synthetic length must be positive".into()));
    }
    if spec.stable_noise < 0.0 || spec.volatile_noise < 0.0 {
        return Err(Error::InvalidArgument("noise scales must be non-negative".into()));
    }
    let dates: Vec<NaiveDate> = trading_days(spec.start, spec.length);
    let mut out = BTreeMap::new();
    for (ticker, kind) in spec.firms() {
        let mut rng = ChaCha8Rng::seed_from_u64(task_seed(seed, &ticker, 0));
        let prices = match kind {
            FirmKind::Stable => stable_path(&mut rng, spec.length, spec.stable_noise),
            FirmKind::Volatile => volatile_path(&mut rng, spec),
        };
        let points = dates.iter().zip(prices).map(|(&date, adj_close)| PricePoint { date, adj_close }).collect();
        out.insert(ticker.clone(), PriceSeries::new(ticker, points)?);
    }
    Ok(out)
}
