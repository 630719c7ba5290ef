//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits nonzero
//! if any criterion fails.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use volmoe_core::evaluation::{
    aggregate_stratified, improvement_pct, mae, mse, plan_walk_forward, prepare_firm, recursive_forecast, rmse,
    run_backtest, run_walk_forward, BacktestConfig, FittedFold, Forecaster, MetricRecord, ModelKind, StepContext,
    TrainMode,
};
use volmoe_core::expert_lstm::{
    backward_bptt, batch_loss, forward_sequence, init_params, run_early_stopping, EpochStats, Tape,
};
use volmoe_core::market_data::{generate_synthetic, SyntheticSpec, WindowSample};
use volmoe_core::{fit_ols, predict_linear, PricePoint, PriceSeries, RegimeLabel};

type Check = Result<String, String>;

struct Criterion {
    id: usize,
    name: &'static str,
    budget: Option<Duration>,
}

fn run(c: Criterion, f: impl FnOnce() -> Check) -> bool {
    let start = Instant::now();
    let outcome = match catch_unwind(AssertUnwindSafe(f)) {
        Ok(r) => r,
        Err(p) => Err(format!(
            "panicked: {}",
            p.downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default()
        )),
    };
    let elapsed = start.elapsed();
    let outcome = match (outcome, c.budget) {
        (Ok(_), Some(b)) if elapsed > b => Err(format!("took {elapsed:.2?}, budget {b:.0?}")),
        (o, _) => o,
    };
    let (tag, detail) = match &outcome {
        Ok(d) => ("PASS", d),
        Err(d) => ("FAIL", d),
    };
    println!("criterion {:>2} {tag}  {}: {detail} [{elapsed:.2?}]", c.id, c.name);
    outcome.is_ok()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn gradient_check() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let params = init_params(4, 1, 3).map_err(|e| e.to_string())?;
    let batch: Vec<WindowSample> = (0..3)
        .map(|k| WindowSample {
            inputs: (0..5).map(|_| rng.random_range(-1.5..1.5)).collect(),
            target: rng.random_range(-1.0..1.0),
            t_index: k,
        })
        .collect();
    let tapes: Vec<Tape> = batch.iter().map(|s| forward_sequence(&params, &s.inputs).unwrap().1).collect();
    let analytic = backward_bptt(&params, &batch, &tapes).map_err(|e| e.to_string())?;
    let step = 1e-5;
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for (ti, tensor) in params.tensors().iter().enumerate() {
        for k in 0..tensor.len() {
            let mut plus = params.clone();
            plus.tensors_mut()[ti][k] += step;
            let mut minus = params.clone();
            minus.tensors_mut()[ti][k] -= step;
            let numeric = (batch_loss(&plus, &batch).unwrap() - batch_loss(&minus, &batch).unwrap()) / (2.0 * step);
            let a = analytic.tensors()[ti][k];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(rel);
            count += 1;
        }
    }
    ensure(worst < 1e-4, || format!("max relative error {worst:.3e} >= 1e-4"))?;
    Ok(format!("{count} parameters, max relative error {worst:.2e} < 1e-4"))
}

fn ols_exactness() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut worst_coef, mut worst_orth): (f64, f64) = (0.0, 0.0);
    for _ in 0..100 {
        let beta = [rng.random_range(-5.0..5.0), rng.random_range(-0.1..0.1), rng.random_range(-50.0..50.0)];
        let n = rng.random_range(20..200);
        let t: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let s: Vec<f64> = (0..n).map(|_| rng.random_range(0.001..0.08)).collect();
        let y: Vec<f64> = t.iter().zip(&s).map(|(&t, &s)| beta[0] + beta[1] * t + beta[2] * s).collect();
        let fit = fit_ols(&t, &s, &y).map_err(|e| e.to_string())?.params;
        for (got, want) in [fit.beta0, fit.beta1, fit.beta2].iter().zip(beta) {
            worst_coef = worst_coef.max((got - want).abs());
        }
        let r: Vec<f64> = (0..n).map(|i| y[i] - predict_linear(&fit, t[i], s[i])).collect();
        let norm_y = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        for col in [vec![1.0; n], t.clone(), s.clone()] {
            let dot: f64 = col.iter().zip(&r).map(|(a, b)| a * b).sum();
            worst_orth = worst_orth.max(dot.abs() / norm_y);
        }
    }
    ensure(worst_coef <= 1e-8, || format!("coefficient error {worst_coef:.3e} > 1e-8"))?;
    ensure(worst_orth < 1e-8, || format!("orthogonality {worst_orth:.3e}·‖y‖ >= 1e-8·‖y‖"))?;
    Ok(format!("100 fits, max |β−β*| {worst_coef:.1e}, max |Xᵀr|/‖y‖ {worst_orth:.1e}"))
}

fn convexity(records: &[MetricRecord], cfg: &BacktestConfig) -> Check {
    let mut groups: BTreeMap<(&str, usize, usize), BTreeMap<ModelKind, &MetricRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((&r.ticker, r.fold_id, r.horizon)).or_default().insert(r.model, r);
    }
    let mut violations = 0;
    let mut worst_slack = f64::INFINITY;
    for models in groups.values() {
        let (lin, lstm, moe) = (models[&ModelKind::Linear], models[&ModelKind::Lstm], models[&ModelKind::Moe]);
        let g = cfg.gates.gate_for_regime(moe.regime);
        let bound = g.w_rnn * lstm.mse + g.w_lm * lin.mse;
        worst_slack = worst_slack.min(bound - moe.mse);
        if moe.mse > bound + 1e-12 {
            violations += 1;
        }
    }
    ensure(violations == 0, || format!("{violations} violations"))?;
    Ok(format!("{} (firm, fold, horizon) groups, 0 violations, min slack {worst_slack:.2e}", groups.len()))
}

fn regime_ordering(records: &[MetricRecord]) -> Check {
    let rep = aggregate_stratified(records);
    let cell =
        |regime, model| rep.get(regime, model, 1).map(|c| c.mse.mean).ok_or("missing horizon-1 cell".to_string());
    let mut line = Vec::new();
    let mut moe_wins = Vec::new();
    for regime in [RegimeLabel::Stable, RegimeLabel::Volatile] {
        let (l, r, m) =
            (cell(regime, ModelKind::Linear)?, cell(regime, ModelKind::Lstm)?, cell(regime, ModelKind::Moe)?);
        line.push(format!("{regime}: lin {l:.4} lstm {r:.4} moe {m:.4}"));
        if m < l.min(r) {
            moe_wins.push(regime);
        }
    }
    let stable_ok = cell(RegimeLabel::Stable, ModelKind::Linear)? < cell(RegimeLabel::Stable, ModelKind::Lstm)?;
    let p1 = improvement_pct(0.001105, 0.001649).map_err(|e| e.to_string())?;
    let p2 = improvement_pct(0.026333, 0.03236).map_err(|e| e.to_string())?;
    let detail = format!("{}; MoE best on {:?}; gains {p1:.2}% / {p2:.2}%", line.join(", "), moe_wins);
    ensure(stable_ok, || format!("stable Linear not below LSTM; {detail}"))?;
    ensure(!moe_wins.is_empty(), || format!("MoE below both experts on no stratum; {detail}"))?;
    ensure((p1 - 32.99).abs() <= 0.01 && (p2 - 18.62).abs() <= 0.01, || format!("improvement_pct off; {detail}"))?;
    Ok(detail)
}

fn fold_geometry() -> Check {
    for n in 100..=1000 {
        let plan = plan_walk_forward(n, 80, 20, 20, TrainMode::SlidingTrain).map_err(|e| e.to_string())?;
        let mut oracle = Vec::new();
        for start in 0..n {
            if start % 20 == 0 && start + 80 + 20 <= n {
                oracle.push((start..start + 80, start + 80..start + 100));
            }
        }
        let got: Vec<_> = plan.folds.iter().map(|f| (f.train_range.clone(), f.val_range.clone())).collect();
        ensure(got == oracle, || format!("n = {n}: plan {got:?} != oracle {oracle:?}"))?;
        ensure(plan.folds.iter().enumerate().all(|(i, f)| f.fold_id == i), || format!("n = {n}: fold ids"))?;
    }
    let six = plan_walk_forward(200, 80, 20, 20, TrainMode::SlidingTrain).unwrap().folds.len();
    ensure(six == 6, || format!("n = 200 gave {six} folds"))?;
    Ok("n in [100, 1000] match enumeration; n = 200 has 6 folds".into())
}

fn fitted_bits(f: &FittedFold) -> Vec<u64> {
    let mut v: Vec<u64> = f.lstm.tensors().iter().flat_map(|t| t.iter().map(|x| x.to_bits())).collect();
    v.extend(
        [f.linear.beta0, f.linear.beta1, f.linear.beta2, f.scaler.mean, f.scaler.std, f.launch.sigma].map(f64::to_bits),
    );
    v.extend(f.launch.window.iter().map(|x| x.to_bits()));
    v.push(f.regime as u64);
    v
}

fn leakage_probe() -> Check {
    let spec = SyntheticSpec { n_stable: 2, n_volatile: 2, length: 200, ..SyntheticSpec::default() };
    let universe = generate_synthetic(&spec, 42).map_err(|e| e.to_string())?;
    let cfg = BacktestConfig { holdout_k: 0, ..BacktestConfig::default() };
    let plan =
        plan_walk_forward(200, cfg.init_train, cfg.val_len, cfg.step, cfg.train_mode).map_err(|e| e.to_string())?;
    let probe_fold = 3;
    let cut = plan.folds[probe_fold].val_range.start;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let perturbed: Vec<PriceSeries> = universe
        .values()
        .map(|s| {
            let points = s
                .points()
                .iter()
                .enumerate()
                .map(|(i, p)| PricePoint {
                    date: p.date,
                    adj_close: if i >= cut { p.adj_close * rng.random_range(0.5..2.0) } else { p.adj_close },
                })
                .collect();
            PriceSeries::new(s.ticker.clone(), points).unwrap()
        })
        .collect();
    let fit = |series: Vec<&PriceSeries>| {
        let firms: Vec<_> = series.into_iter().map(|s| prepare_firm(s, cfg.mode, &cfg.policy).unwrap()).collect();
        run_walk_forward(&firms, &plan, &cfg).unwrap()
    };
    let a = fit(universe.values().collect());
    let b = fit(perturbed.iter().collect());
    let mut checked = 0;
    let mut changed_later = 0;
    for (fa, fb) in a.fitted.iter().zip(&b.fitted) {
        let same = fitted_bits(fa) == fitted_bits(fb);
        if fa.fold_id <= probe_fold {
            ensure(same, || format!("{} fold {} parameters changed", fa.ticker, fa.fold_id))?;
            checked += 1;
        } else if !same {
            changed_later += 1;
        }
    }
    ensure(changed_later > 0, || "perturbation did not reach any later fold".into())?;
    Ok(format!(
        "observations from index {cut} perturbed; {checked} fitted (firm, fold) sets bit-identical, {changed_later} later ones differ"
    ))
}

fn metric_identities() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.random_range(1..50);
        let p: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
        let t: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
        let (m, a, r) = (mse(&p, &t).unwrap(), mae(&p, &t).unwrap(), rmse(&p, &t).unwrap());
        let rel = if m == 0.0 { (r * r).abs() } else { (r * r - m).abs() / m };
        worst = worst.max(rel);
        ensure(a <= r * (1.0 + 1e-15), || format!("mae {a} > rmse {r}"))?;
    }
    ensure(worst <= 1e-10, || format!("rmse² vs mse relative error {worst:.3e}"))?;
    Ok(format!("1000 vectors, max |rmse²−mse|/mse {worst:.1e}, mae ≤ rmse everywhere"))
}

fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn determinism() -> Check {
    let work = tempfile::tempdir().map_err(|e| e.to_string())?;
    let conf = "synth.n_stable = 2\nsynth.n_volatile = 2\nsynth.length = 200\nholdout.k = 0\nreport.dir = out\n";
    fs::write(work.path().join("run.conf"), conf).unwrap();
    let mut runs = Vec::new();
    for _ in 0..2 {
        for cmd in ["backtest", "report"] {
            let o = Command::new(env!("CARGO_BIN_EXE_volmoe"))
                .current_dir(work.path())
                .args(["--config", "run.conf", "--seed", "42", cmd])
                .output()
                .map_err(|e| e.to_string())?;
            ensure(o.status.success(), || format!("{cmd} failed: {}", String::from_utf8_lossy(&o.stderr)))?;
        }
        runs.push(snapshot(&work.path().join("out")));
        fs::remove_dir_all(work.path().join("out")).unwrap();
    }
    let (a, b) = (&runs[0], &runs[1]);
    ensure(a.keys().eq(b.keys()), || "different file sets".into())?;
    let differing: Vec<_> = a.iter().filter(|(k, v)| b[*k] != **v).map(|(k, _)| k.display().to_string()).collect();
    ensure(differing.is_empty(), || format!("files differ: {differing:?}"))?;
    let bytes: usize = a.values().map(Vec::len).sum();
    Ok(format!("{} files ({bytes} bytes) byte-identical across two runs", a.len()))
}

struct Naive;

impl Forecaster for Naive {
    fn predict_next(&self, window: &[f64], _t: f64, _sigma: f64) -> volmoe_core::Result<f64> {
        Ok(*window.last().unwrap())
    }
}

struct Recorder {
    seen: RefCell<Vec<Vec<f64>>>,
}

impl Forecaster for Recorder {
    fn predict_next(&self, window: &[f64], t: f64, _sigma: f64) -> volmoe_core::Result<f64> {
        self.seen.borrow_mut().push(window.to_vec());
        Ok((t * 0.37).sin() + window.iter().sum::<f64>() * 0.1)
    }
}

fn recursive_contract() -> Check {
    let observed = [0.4, -1.0, 2.5, 0.3, 1.7, -0.2, 0.9, 1.1, -0.6, 0.25];
    let ctx = StepContext { t: 80.0, sigma: 0.02, regime: RegimeLabel::Volatile };
    for h in [5, 20, 60] {
        let path = recursive_forecast(&Naive, &observed, &ctx, h).map_err(|e| e.to_string())?;
        ensure(path.len() == h && path.iter().all(|&p| p == 0.25), || format!("naive path not constant at h = {h}"))?;

        let rec = Recorder { seen: RefCell::new(Vec::new()) };
        let preds = recursive_forecast(&rec, &observed, &ctx, h).map_err(|e| e.to_string())?;
        let seen = rec.seen.into_inner();
        for (j, window) in seen.iter().enumerate() {
            let full: Vec<f64> = observed.iter().copied().chain(preds[..j].iter().copied()).collect();
            let expect = &full[full.len() - observed.len()..];
            ensure(window == expect, || format!("h = {h}, step {j}: window {window:?} != {expect:?}"))?;
        }
    }
    Ok("naive paths constant for h in {5, 20, 60}; window replay matches at every step".into())
}

fn early_stopping_trace() -> Check {
    let trace = [0.50, 0.60, 0.70, 0.80, 0.90, 1.00, 1.10, 1.20];
    let (best, records, best_epoch, stopped) = run_early_stopping(50, 5, 0usize, |p, epoch| {
        *p = epoch;
        Ok(EpochStats { train_mse: 1.0, val_mae: trace[epoch - 1] })
    })
    .map_err(|e| e.to_string())?;
    ensure(records.len() == 6, || format!("ran {} epochs, expected 6", records.len()))?;
    ensure(best_epoch == 1 && best == 1, || format!("restored epoch {best_epoch} (params {best})"))?;
    ensure(stopped, || "not flagged as stopped early".into())?;
    Ok("stopped after epoch 6, restored epoch-1 parameters".into())
}

fn main() {
    let mut ok = Vec::new();
    let c = |id, name, secs: Option<u64>| Criterion { id, name, budget: secs.map(Duration::from_secs) };

    ok.push(run(c(1, "gradient correctness", Some(10)), gradient_check));
    ok.push(run(c(2, "OLS exactness", Some(1)), ols_exactness));

    let cfg = BacktestConfig { holdout_k: 0, seed: 42, ..BacktestConfig::default() };
    let started = Instant::now();
    let backtest = generate_synthetic(&SyntheticSpec::default(), 42).and_then(|u| run_backtest(&u, &cfg));
    let backtest_time = started.elapsed();
    match &backtest {
        Ok(out) => {
            let records = out.all_records();
            ok.push(run(c(3, "convexity bound", None), || convexity(&records, &cfg)));
            ok.push(run(c(4, "regime ordering", None), || {
                let d = regime_ordering(&records)?;
                ensure(backtest_time < Duration::from_secs(15 * 60), || format!("backtest took {backtest_time:.1?}"))?;
                Ok(format!("{d}; backtest {backtest_time:.1?} < 15 min"))
            }));
        }
        Err(e) => {
            let msg = format!("synthetic backtest failed: {e}");
            ok.push(run(c(3, "convexity bound", None), || Err(msg.clone())));
            ok.push(run(c(4, "regime ordering", None), || Err(msg.clone())));
        }
    }

    ok.push(run(c(5, "walk-forward geometry", Some(1)), fold_geometry));
    ok.push(run(c(6, "no-leakage probe", Some(120)), leakage_probe));
    ok.push(run(c(7, "metric identities", Some(1)), metric_identities));
    ok.push(run(c(8, "determinism", None), determinism));
    ok.push(run(c(9, "recursive-forecast contract", None), recursive_contract));
    ok.push(run(c(10, "early-stopping trace", None), early_stopping_trace));

    let passed = ok.iter().filter(|&&b| b).count();
    println!("acceptance: {passed}/{} criteria passed", ok.len());
    if passed != ok.len() {
        std::process::exit(1);
    }
}
