use super::{PriceSeries, ReturnKind, ReturnSeries, VolatilitySeries};
use crate::{Error, Result};

fn check_len(series: &PriceSeries) -> Result<()> {
    if series.len() < 2 {
        return Err(Error::SeriesTooShort { needed: 2, got: series.len() });
    }
    Ok(())
}

/// `(P[k+1] - P[k]) / P[k]` for every consecutive pair.
pub fn simple_returns(series: &PriceSeries) -> Result<ReturnSeries> {
    check_len(series)?;
    let values = series.points().windows(2).map(|w| (w[1].adj_close - w[0].adj_close) / w[0].adj_close).collect();
    Ok(ReturnSeries { ticker: series.ticker.clone(), values, kind: ReturnKind::Simple })
}

/// `ln(P[k+1] / P[k])` for every consecutive pair.
pub fn log_returns(series: &PriceSeries) -> Result<ReturnSeries> {
    check_len(series)?;
    let values = series.points().windows(2).map(|w| (w[1].adj_close / w[0].adj_close).ln()).collect();
    Ok(ReturnSeries { ticker: series.ticker.clone(), values, kind: ReturnKind::Log })
}

/// Trailing sample standard deviation (divisor `window - 1`) over each full window.
pub fn rolling_volatility(returns: &ReturnSeries, window: usize) -> Result<VolatilitySeries> {
    if window < 2 {
        return Err(Error::InvalidArgument(format!("volatility window must be >= 2, got {window}")));
    }
    if window > returns.values.len() {
        return Err(Error::WindowTooLong { window, len: returns.values.len() });
    }
    let values = returns
        .values
        .windows(window)
        .map(|w| {
            let mean = w.iter().sum::<f64>() / window as f64;
            let ss: f64 = w.iter().map(|r| (r - mean).powi(2)).sum();
            (ss / (window - 1) as f64).sqrt()
        })
        .collect();
    Ok(VolatilitySeries { ticker: returns.ticker.clone(), window, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn series(prices: &[f64]) -> PriceSeries {
        PriceSeries::from_prices("T", prices).unwrap()
    }

    #[test]
    fn constant_price_has_zero_returns() {
        let r = simple_returns(&series(&[100.0, 100.0, 100.0])).unwrap();
        assert_eq!(r.values, vec![0.0, 0.0]);
        let l = log_returns(&series(&[100.0, 100.0])).unwrap();
        assert_eq!(l.values, vec![0.0]);
    }

    #[test]
    fn simple_return_by_hand() {
        let r = simple_returns(&series(&[100.0, 110.0, 99.0])).unwrap();
        assert!((r.values[0] - 0.10).abs() < 1e-15);
        assert!((r.values[1] + 0.10).abs() < 1e-15);
    }

    #[test]
    fn log_return_of_e_ratio_is_one() {
        let l = log_returns(&series(&[100.0, 100.0 * std::f64::consts::E])).unwrap();
        assert!((l.values[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn too_short_series() {
        assert!(matches!(simple_returns(&series(&[1.0])), Err(Error::SeriesTooShort { .. })));
        assert!(log_returns(&series(&[1.0])).is_err());
    }

    #[test]
    fn two_point_volatility() {
        let r = ReturnSeries { ticker: "T".into(), values: vec![0.01, -0.01], kind: ReturnKind::Simple };
        let v = rolling_volatility(&r, 2).unwrap();
        assert_eq!(v.values.len(), 1);
        assert!((v.values[0] - 0.0141421356237).abs() < 1e-12);
    }

    #[test]
    fn constant_returns_zero_volatility() {
        let r = ReturnSeries { ticker: "T".into(), values: vec![0.003; 40], kind: ReturnKind::Simple };
        let v = rolling_volatility(&r, 30).unwrap();
        assert_eq!(v.values.len(), 11);
        assert!(v.values.iter().all(|&s| s.abs() < 1e-15));
    }

    #[test]
    fn window_longer_than_series() {
        let r = ReturnSeries { ticker: "T".into(), values: vec![0.0; 5], kind: ReturnKind::Simple };
        assert!(matches!(rolling_volatility(&r, 6), Err(Error::WindowTooLong { .. })));
    }

    #[test]
    fn log_and_simple_agree_to_second_order() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let r: f64 = rng.random_range(-0.01..0.01);
            let s = series(&[50.0, 50.0 * (1.0 + r)]);
            let simple = simple_returns(&s).unwrap().values[0];
            let log = log_returns(&s).unwrap().values[0];
            assert!((log - simple).abs() < simple * simple + 1e-15);
        }
    }

    proptest! {
        #[test]
        fn shape_laws(prices in prop::collection::vec(1.0f64..500.0, 3..80), window in 2usize..10) {
            let s = series(&prices);
            let r = simple_returns(&s).unwrap();
            prop_assert_eq!(r.values.len(), prices.len() - 1);
            prop_assert!(r.values.iter().all(|&v| v > -1.0));
            if window <= r.values.len() {
                let v = rolling_volatility(&r, window).unwrap();
                prop_assert_eq!(v.values.len(), r.values.len() - window + 1);
                prop_assert!(v.values.iter().all(|&x| x >= 0.0));
            }
        }

        #[test]
        fn returns_are_scale_free(prices in prop::collection::vec(1.0f64..500.0, 2..40), c in 0.01f64..100.0) {
            let a = series(&prices);
            let scaled: Vec<f64> = prices.iter().map(|p| p * c).collect();
            let b = series(&scaled);
            for (x, y) in simple_returns(&a).unwrap().values.iter().zip(simple_returns(&b).unwrap().values) {
                prop_assert!((x - y).abs() < 1e-12);
            }
            for (x, y) in log_returns(&a).unwrap().values.iter().zip(log_returns(&b).unwrap().values) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }

        #[test]
        fn volatility_shift_equivariant(
            base in prop::collection::vec(-0.05f64..0.05, 5..40),
            prefix in prop::collection::vec(-0.05f64..0.05, 0..10),
            window in 2usize..5,
        ) {
            let a = ReturnSeries { ticker: "T".into(), values: base.clone(), kind: ReturnKind::Simple };
            let mut ext = prefix.clone();
            ext.extend_from_slice(&base);
            let b = ReturnSeries { ticker: "T".into(), values: ext, kind: ReturnKind::Simple };
            let va = rolling_volatility(&a, window).unwrap();
            let vb = rolling_volatility(&b, window).unwrap();
            for (j, x) in va.values.iter().enumerate() {
                prop_assert_eq!(*x, vb.values[j + prefix.len()]);
            }
        }
    }
}
