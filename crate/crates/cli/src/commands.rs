use std::fs;
use std::path::Path;
use std::time::Instant;

use serde_json::json;

use tide::bench::{fit_affine, run_bench, timings_csv, BenchConfig};
use tide::data::dataset::{parse_timestamp, Frequency, TimeSeriesDataset};
use tide::data::split::{Scaler, Segment};
use tide::data::synthetic::synthetic_load;
use tide::data::windows::{enumerate_windows, WindowBatch, WindowPolicy};
use tide::data::{load_csv, prepare_benchmark, Prepared};
use tide::eval::metrics::MetricsReport;
use tide::eval::rolling::{rolling_evaluate, Forecaster};
use tide::eval::train::{train_on_windows, TrainConfig};
use tide::kv;
use tide::lds::{fit_linear, make_lds_dataset, verify_decay};
use tide::model::checkpoint;
use tide::model::suite::{gradient_suite, suite_config};
use tide::model::tide::TiDEParams;
use tide::model::Variant;
use tide::tape::BackwardFault;
use tide::tensor::Tensor;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{self, OutDir};
use crate::{BenchArgs, ConfigArgs, EvaluateArgs, GradcheckArgs, LdsArgs, TrainArgs};

const DECAY_SLOPE_TOL: f64 = 0.1;

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

/// Preset flag, then the file, then flags and `--set` overrides.
fn run_config(args: &ConfigArgs) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();
    if let Some(p) = &args.preset {
        cfg.apply_preset(p)?;
    }
    if let Some(path) = &args.config {
        cfg.apply_text(&read_text(path)?)?;
    }
    if let Some(h) = args.horizon {
        cfg.model.horizon = h;
    }
    if let Some(s) = args.seed {
        cfg.train.seed = s;
    }
    for item in &args.overrides {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| CliError::Config { key: None, message: format!("override `{item}` is not `key=value`") })?;
        cfg.set(k.trim(), v.trim())?;
    }
    Ok(cfg)
}

fn load_prepared(path: &Path, series_limit: Option<usize>) -> Result<Prepared, CliError> {
    if !path.exists() {
        return Err(CliError::io(path, std::io::Error::new(std::io::ErrorKind::NotFound, "dataset file not found")));
    }
    let mut raw = load_csv(path)?;
    if let Some(n) = series_limit {
        raw = raw.take_series(n)?;
    }
    Ok(prepare_benchmark(raw)?)
}

pub fn train(args: TrainArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let mut cfg = run_config(&args.run)?;
    if let Some(d) = &args.data {
        cfg.data = Some(d.clone());
    }
    if let Some(v) = &args.variant {
        cfg.set("variant", v)?;
    }
    let data = cfg
        .data
        .clone()
        .ok_or_else(|| CliError::config("data", "no dataset given; pass --data or set `data`"))?;
    let prep = load_prepared(&data, cfg.series_limit)?;
    let ds = &prep.dataset;
    cfg.bind_dataset(ds.covariate_dim(), ds.static_dim(), ds.num_series())?;
    cfg.validate()?;
    let (l, h) = (cfg.model.lookback, cfg.model.horizon);
    prep.spec.require(l, h)?;
    let out = OutDir::create(&args.outdir)?;

    let windows = |seg: Segment| {
        let (a, b) = prep.spec.bounds(seg);
        enumerate_windows(ds.num_series(), a, b, l, h, WindowPolicy::for_segment(seg))
    };
    let outcome = train_on_windows(
        &cfg.model,
        cfg.variant,
        &cfg.train,
        ds,
        &windows(Segment::Train),
        &windows(Segment::Val),
        |r| eprintln!("epoch {:>3}  train {:.5}  val {:.5}  lr {:.3e}", r.epoch, r.train_mse, r.val_mse, r.lr),
    )?;
    let test = rolling_evaluate(&outcome.model, ds, &prep.spec, Segment::Test)?;

    checkpoint::save(&outcome.model, &out.path(output::CHECKPOINT))?;
    out.write(output::HISTORY, outcome.history_csv())?;
    out.write(output::METRICS, test.to_json() + "\n")?;
    let pairs = cfg.to_kv();
    let summary = json!({
        "best_epoch": outcome.best_epoch,
        "best_val_mse": outcome.best_val_mse,
        "test_mse": test.mse,
        "test_mae": test.mae,
        "test_windows": test.window_count,
    });
    out.write(output::MANIFEST, output::pretty(&output::manifest("train", &pairs, cfg.train.seed, started, summary)))?;
    println!(
        "best epoch {}  val mse {:.5}  test mse {:.5}  test mae {:.5}  ({} windows)",
        outcome.best_epoch, outcome.best_val_mse, test.mse, test.mae, test.window_count
    );
    Ok(())
}

/// Standardizes look-backs, predicts, and maps the forecast back.
struct RawUnits<'a> {
    model: &'a TiDEParams,
    scaler: &'a Scaler,
}

impl Forecaster for RawUnits<'_> {
    fn lookback(&self) -> usize {
        self.model.config.lookback
    }

    fn horizon(&self) -> usize {
        self.model.config.horizon
    }

    fn predict(&self, batch: &WindowBatch) -> tide::Result<Tensor> {
        let mut scaled = batch.clone();
        for (r, &i) in batch.series_index.iter().enumerate() {
            let (m, s) = (self.scaler.mean[i], self.scaler.std[i]);
            scaled.lookback.row_mut(r).iter_mut().for_each(|v| *v = (*v - m) / s);
        }
        let mut pred = self.model.predict(&scaled)?;
        for (r, &i) in batch.series_index.iter().enumerate() {
            let (m, s) = (self.scaler.mean[i], self.scaler.std[i]);
            pred.row_mut(r).iter_mut().for_each(|v| *v = *v * s + m);
        }
        Ok(pred)
    }
}

pub fn evaluate(args: EvaluateArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let segment: Segment = args.segment.parse().map_err(|e: tide::Error| CliError::config("segment", e.to_string()))?;
    if segment == Segment::Train {
        return Err(CliError::config("segment", "rolling evaluation runs on `val` or `test`"));
    }
    let model = checkpoint::load(&args.checkpoint)?;
    let prep = load_prepared(&args.data, args.series_limit)?;
    let c = &model.config;
    let ds = &prep.dataset;
    for (key, want, got) in [
        ("covariate_dim", c.covariate_dim, ds.covariate_dim()),
        ("static_dim", c.static_dim, ds.static_dim()),
    ] {
        if want != got {
            return Err(CliError::config(key, format!("checkpoint expects `{key}` = {want}, the dataset provides {got}")));
        }
    }
    if c.rev_in && ds.num_series() > c.num_series {
        return Err(CliError::config(
            "num_series",
            format!("checkpoint holds `num_series` = {}, the dataset has {}", c.num_series, ds.num_series()),
        ));
    }
    let report: MetricsReport = if args.raw_units {
        let raw = prep.scaler.invert(ds)?;
        rolling_evaluate(&RawUnits { model: &model, scaler: &prep.scaler }, &raw, &prep.spec, segment)?
    } else {
        rolling_evaluate(&model, ds, &prep.spec, segment)?
    };
    let text = report.to_json();
    println!("{text}");
    if let Some(dir) = &args.outdir {
        let out = OutDir::create(dir)?;
        out.write(output::METRICS, text + "\n")?;
        let mut pairs = c.to_kv();
        pairs.extend([
            ("variant".to_string(), model.variant.to_string()),
            ("checkpoint".to_string(), args.checkpoint.display().to_string()),
            ("data".to_string(), args.data.display().to_string()),
            ("segment".to_string(), args.segment.clone()),
            ("raw_units".to_string(), args.raw_units.to_string()),
        ]);
        let summary = json!({ "mse": report.mse, "mae": report.mae, "window_count": report.window_count });
        out.write(output::MANIFEST, output::pretty(&output::manifest("evaluate", &pairs, 0, started, summary)))?;
    }
    Ok(())
}

pub fn bench(args: BenchArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let mut cfg = run_config(&args.run)?;
    let longest = args.lookbacks.iter().copied().max().unwrap_or(0);
    let ds: TimeSeriesDataset = match &args.data {
        Some(path) => load_prepared(path, cfg.series_limit)?.dataset,
        None => {
            let len = ((longest + args.batch + cfg.model.horizon) as f64 / 0.7).ceil() as usize;
            let start = parse_timestamp("2016-07-01 00:00").expect("literal timestamp");
            synthetic_load(args.series, len, Frequency::Hourly, start, cfg.train.seed)?.with_time_features()?
        }
    };
    cfg.bind_dataset(ds.covariate_dim(), ds.static_dim(), ds.num_series())?;
    cfg.validate()?;
    let out = OutDir::create(&args.outdir)?;
    let bench_cfg = BenchConfig {
        lookbacks: args.lookbacks.clone(),
        batch_points: args.batch,
        warmup: args.warmup,
        reps: args.reps,
        train_batch_size: cfg.train.batch_size,
        ..BenchConfig::default()
    };
    let train_end = (ds.len() as f64 * 0.7).floor() as usize;
    let (n, h, bs) = (ds.num_series(), cfg.model.horizon, cfg.train.batch_size);
    let train_batches = |l: usize| enumerate_windows(n, 0, train_end, l, h, WindowPolicy::Contained).len().div_ceil(bs);
    let points = run_bench(&cfg.model, &ds, &bench_cfg, train_batches, |p| {
        eprintln!("L={:<5} infer {:>12.1} us  train/epoch {:>10.2} s  ({} rows)", p.lookback, p.infer_us, p.train_s, p.batch_rows)
    })?;
    out.write(output::TIMINGS, timings_csv(&points))?;
    let xs: Vec<f64> = points.iter().map(|p| p.lookback as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.infer_us).collect();
    let fit = if points.len() >= 2 { Some(fit_affine(&xs, &ys)?) } else { None };
    let mut pairs = cfg.to_kv();
    pairs.extend([
        ("lookbacks".to_string(), format!("{:?}", args.lookbacks)),
        ("batch_points".to_string(), args.batch.to_string()),
        ("reps".to_string(), args.reps.to_string()),
        ("warmup".to_string(), args.warmup.to_string()),
        ("series".to_string(), n.to_string()),
    ]);
    let summary = json!({
        "affine_intercept_us": fit.map(|f| f.intercept),
        "affine_slope_us": fit.map(|f| f.slope),
        "r2": fit.map(|f| f.r2),
    });
    out.write(output::MANIFEST, output::pretty(&output::manifest("bench", &pairs, cfg.train.seed, started, summary)))?;
    if let Some(f) = fit {
        println!("infer_us ≈ {:.1} + {:.3}·L  (R² = {:.4})", f.intercept, f.slope, f.r2);
    }
    Ok(())
}

pub fn lds(args: LdsArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let out = OutDir::create(&args.outdir)?;
    let pairs = vec![("seed".to_string(), args.seed.to_string())];
    if args.verify_decay {
        let r = verify_decay(args.seed)?;
        out.write("decay.csv", r.curve_csv())?;
        let ok = (r.slope - r.gamma.ln()).abs() <= DECAY_SLOPE_TOL && r.within_envelope;
        let summary = json!({
            "gamma": r.gamma,
            "fitted_slope": r.slope,
            "ln_gamma": r.gamma.ln(),
            "within_envelope": r.within_envelope,
            "monotone": r.monotone,
        });
        out.write("decay.json", output::pretty(&summary))?;
        out.write(output::MANIFEST, output::pretty(&output::manifest("lds --verify-decay", &pairs, args.seed, started, summary)))?;
        println!("slope {:.4}  ln γ {:.4}  within envelope {}", r.slope, r.gamma.ln(), r.within_envelope);
        if !ok {
            return Err(CliError::Check(format!("decay slope {:.4} or envelope check out of tolerance", r.slope)));
        }
    } else if args.make_dataset {
        let lds = make_lds_dataset(args.seed)?;
        lds.dataset.write_csv(&out.path("lds_outputs.csv"))?;
        lds.dataset.write_covariates_csv(&out.path("lds_inputs.csv"))?;
        let counts = json!({ "train": lds.train.len(), "val": lds.val.len(), "test": lds.test.len() });
        out.write(output::MANIFEST, output::pretty(&output::manifest("lds --make-dataset", &pairs, args.seed, started, counts.clone())))?;
        println!("{counts}");
    } else {
        let tcfg = TrainConfig { seed: args.seed, ..TrainConfig::default() };
        let fit = fit_linear(args.seed, &tcfg)?;
        out.write(output::HISTORY, fit.outcome.history_csv())?;
        out.write(output::METRICS, fit.test.to_json() + "\n")?;
        let summary = json!({ "test_mse": fit.test.mse, "best_epoch": fit.outcome.best_epoch });
        out.write(output::MANIFEST, output::pretty(&output::manifest("lds --fit-linear", &pairs, args.seed, started, summary)))?;
        println!("linear test mse {:.4}  mae {:.4}  ({} windows)", fit.test.mse, fit.test.mae, fit.test.window_count);
    }
    Ok(())
}

pub fn gradcheck(args: GradcheckArgs) -> Result<(), CliError> {
    let mut cfg = suite_config();
    let mut variant = Variant::Full;
    if let Some(path) = &args.config {
        let pairs = kv::parse(&read_text(path)?).map_err(|e| CliError::Config { key: None, message: e.to_string() })?;
        for (k, v) in &pairs {
            if k == "variant" {
                variant = v.parse().map_err(|e: tide::Error| CliError::config("variant", e.to_string()))?;
            } else if !cfg.set(k, v).map_err(|e| CliError::config(k, e.to_string()))? {
                return Err(CliError::config(k, format!("unknown configuration key `{k}`")));
            }
        }
    }
    let fault = args.inject_fault.then_some(BackwardFault::ReluSlope(0.5));
    let checks = gradient_suite(&cfg, variant, args.seed, fault)?;
    for c in &checks {
        println!(
            "{:<20} max rel err {:.3e}  relu margin {:.1e}  {}",
            c.name,
            c.report.max_rel_error,
            c.report.relu_margin,
            if c.passed() { "ok" } else { "FAIL" }
        );
    }
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed()).map(|c| c.name.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Check(format!("gradient mismatch in {}", failed.join(", "))))
    }
}
