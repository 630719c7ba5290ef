use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use volmoe_core::evaluation::{plan_walk_forward, prepare_firm, run_walk_forward, BacktestConfig, TrainMode};
use volmoe_core::expert_lstm::{adam_step, backward_bptt, forward_sequence, init_params, AdamState, Tape};
use volmoe_core::market_data::{generate_synthetic, log_returns, rolling_volatility, SyntheticSpec, WindowSample};
use volmoe_core::{fit_ols, TrainConfig};

fn batch(rng: &mut ChaCha8Rng, size: usize, window: usize) -> Vec<WindowSample> {
    (0..size)
        .map(|k| WindowSample {
            inputs: (0..window).map(|_| rng.random_range(-2.0..2.0)).collect(),
            target: rng.random_range(-2.0..2.0),
            t_index: k,
        })
        .collect()
}

fn lstm(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let params = init_params(50, 1, 1).unwrap();
    let samples = batch(&mut rng, 16, 10);

    c.bench_function("lstm_forward_batch16_w10_h50", |b| {
        b.iter(|| {
            for s in &samples {
                black_box(forward_sequence(&params, black_box(&s.inputs)).unwrap().0);
            }
        })
    });

    let tapes: Vec<Tape> = samples.iter().map(|s| forward_sequence(&params, &s.inputs).unwrap().1).collect();
    c.bench_function("lstm_bptt_batch16_w10_h50", |b| {
        b.iter(|| black_box(backward_bptt(&params, &samples, &tapes).unwrap()))
    });

    let grads = backward_bptt(&params, &samples, &tapes).unwrap();
    let cfg = TrainConfig::default();
    c.bench_function("adam_step_h50", |b| {
        b.iter_batched(
            || (params.clone(), AdamState::new(&params)),
            |(mut p, mut state)| {
                adam_step(&mut p, &grads, &mut state, &cfg).unwrap();
                p
            },
            BatchSize::SmallInput,
        )
    });
}

fn linear_and_volatility(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let t: Vec<f64> = (0..80).map(f64::from).collect();
    let s: Vec<f64> = (0..80).map(|_| rng.random_range(0.005..0.05)).collect();
    let y: Vec<f64> = (0..80).map(|i| 1.0 + 0.01 * t[i] + 3.0 * s[i] + rng.random_range(-0.1..0.1)).collect();
    c.bench_function("ols_fit_n80", |b| b.iter(|| black_box(fit_ols(&t, &s, &y).unwrap())));

    let spec = SyntheticSpec { n_stable: 0, n_volatile: 1, length: 2000, ..SyntheticSpec::default() };
    let series = generate_synthetic(&spec, 3).unwrap().into_values().next().unwrap();
    let returns = log_returns(&series).unwrap();
    c.bench_function("rolling_volatility_n2000_w21", |b| {
        b.iter(|| black_box(rolling_volatility(&returns, 21).unwrap()))
    });
}

fn walk_forward(c: &mut Criterion) {
    let spec = SyntheticSpec { n_stable: 1, n_volatile: 1, length: 100, ..SyntheticSpec::default() };
    let universe = generate_synthetic(&spec, 4).unwrap();
    let cfg = BacktestConfig { holdout_k: 0, ..BacktestConfig::default() };
    let firms: Vec<_> = universe.values().map(|s| prepare_firm(s, cfg.mode, &cfg.policy).unwrap()).collect();
    let plan = plan_walk_forward(100, 80, 20, 20, TrainMode::SlidingTrain).unwrap();
    let mut group = c.benchmark_group("walk_forward");
    group.sample_size(10);
    group
        .bench_function("two_firms_one_fold", |b| b.iter(|| black_box(run_walk_forward(&firms, &plan, &cfg).unwrap())));
    group.finish();
}

criterion_group!(benches, lstm, linear_and_volatility, walk_forward);
criterion_main!(benches);
