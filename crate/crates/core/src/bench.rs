//! Wall-clock scaling of inference and training with the look-back length.

use std::time::Instant;

use crate::data::dataset::TimeSeriesDataset;
use crate::data::windows::{build_batch, Window};
use crate::error::{Error, Result};
use crate::model::config::{ModelConfig, Variant};
use crate::model::tide::TiDEParams;
use crate::optim::{adam_update, AdamState};
use crate::tape::{Mode, Tape};

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub lookbacks: Vec<usize>,
    /// Time points per batch; every series contributes one window per point.
    pub batch_points: usize,
    pub warmup: usize,
    pub reps: usize,
    /// Training step repetitions used for the per-epoch estimate.
    pub train_reps: usize,
    pub train_batch_size: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            lookbacks: vec![192, 336, 720, 1440, 2880],
            batch_points: 8,
            warmup: 3,
            reps: 20,
            train_reps: 3,
            train_batch_size: 512,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BenchPoint {
    pub lookback: usize,
    /// Median inference time per batch, microseconds.
    pub infer_us: f64,
    /// Median training step time times the number of training batches.
    pub train_s: f64,
    pub batch_rows: usize,
}

pub fn median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty(), "median of nothing");
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Runs `f` `warmup` times untimed, then `reps` times; returns the median
/// in seconds.
pub fn time_median(warmup: usize, reps: usize, mut f: impl FnMut() -> Result<()>) -> Result<f64> {
    for _ in 0..warmup {
        f()?;
    }
    let mut samples = Vec::with_capacity(reps);
    for _ in 0..reps.max(1) {
        let t = Instant::now();
        f()?;
        samples.push(t.elapsed().as_secs_f64());
    }
    Ok(median(&mut samples))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AffineFit {
    pub intercept: f64,
    pub slope: f64,
    pub r2: f64,
}

/// Ordinary least squares `y ≈ a + b·x`.
pub fn fit_affine(xs: &[f64], ys: &[f64]) -> Result<AffineFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::Contract(format!("affine fit needs two or more pairs, got {} and {}", xs.len(), ys.len())));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Contract("affine fit needs distinct x values".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r2 = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    Ok(AffineFit { intercept, slope, r2 })
}

/// Times inference on `batch_points × num_series` windows and a training
/// step for each look-back. `base` supplies every setting except the
/// look-back; `train_batches` is the number of batches in one epoch.
pub fn run_bench(
    base: &ModelConfig,
    dataset: &TimeSeriesDataset,
    cfg: &BenchConfig,
    train_batches: impl Fn(usize) -> usize,
    mut on_point: impl FnMut(&BenchPoint),
) -> Result<Vec<BenchPoint>> {
    if cfg.batch_points == 0 || cfg.reps == 0 {
        return Err(Error::Config("batch_points and reps must be positive".into()));
    }
    let mut out = Vec::with_capacity(cfg.lookbacks.len());
    for &lookback in &cfg.lookbacks {
        if lookback + cfg.batch_points - 1 + base.horizon > dataset.len() {
            return Err(Error::Config(format!(
                "look-back {lookback} with horizon {} does not fit {} steps",
                base.horizon,
                dataset.len()
            )));
        }
        let mut mc = base.clone();
        mc.lookback = lookback;
        let model = TiDEParams::init(&mc, Variant::Full, 0)?;
        let windows: Vec<Window> = (0..dataset.num_series())
            .flat_map(|series| (0..cfg.batch_points).map(move |k| Window { series, anchor: lookback + k }))
            .collect();
        let batch = build_batch(dataset, &windows, lookback, mc.horizon)?;
        let infer = time_median(cfg.warmup, cfg.reps, || model.forward(&batch, &mut Mode::Eval).map(drop))?;

        let rows = cfg.train_batch_size.min(windows.len());
        let train_batch = build_batch(dataset, &windows[..rows], lookback, mc.horizon)?;
        let mut params = model.store.tensors().to_vec();
        let mut adam = AdamState::new(&params);
        let step = time_median(1, cfg.train_reps, || {
            let mut tape = Tape::new();
            let vars = model.store.register(&mut tape);
            let pred = model.forward_on_tape(&mut tape, &vars, &train_batch, &mut Mode::Eval)?;
            let target = tape.constant(train_batch.target.clone());
            let loss = tape.mse_loss(pred, target)?;
            let mut grads = tape.backward(loss)?;
            let g: Vec<_> = vars.iter().zip(&params).map(|(v, p)| grads.take_or_zeros(*v, p.shape())).collect();
            adam_update(&mut params, &g, &mut adam, 1e-6)
        })?;
        let point = BenchPoint {
            lookback,
            infer_us: infer * 1e6,
            train_s: step * train_batches(lookback) as f64,
            batch_rows: windows.len(),
        };
        on_point(&point);
        out.push(point);
    }
    Ok(out)
}

pub fn timings_csv(points: &[BenchPoint]) -> String {
    let mut s = String::from("L,infer_us,train_s\n");
    for p in points {
        s.push_str(&format!("{},{:.3},{:.6}\n", p.lookback, p.infer_us, p.train_s));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::dataset::{parse_timestamp, Frequency};
    use crate::tensor::Tensor;

    #[test]
    fn exact_line_has_unit_r2() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 + 0.5 * x).collect();
        let f = fit_affine(&xs, &ys).unwrap();
        assert!((f.slope - 0.5).abs() < 1e-12 && (f.intercept - 3.0).abs() < 1e-12);
        assert!((f.r2 - 1.0).abs() < 1e-12);
        let f = fit_affine(&[0.0, 1.0, 2.0], &[0.0, 1.0, 0.0]).unwrap();
        assert!(f.r2.abs() < 1e-12);
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn tiny_sweep_runs() {
        let t = 80;
        let ts = TimeSeriesDataset::regular_timestamps(parse_timestamp("2020-01-01 00:00").unwrap(), Frequency::Hourly, t);
        let values = Tensor::new(vec![3, t], (0..3 * t).map(|v| (v as f64 * 0.1).sin()).collect()).unwrap();
        let ds = TimeSeriesDataset::new(vec!["a".into(), "b".into(), "c".into()], values, ts)
            .unwrap()
            .with_time_features()
            .unwrap();
        let mut base = ModelConfig::small(1, 4, 8);
        base.temporal_width = 4;
        let cfg = BenchConfig { lookbacks: vec![8, 16, 32], warmup: 1, reps: 3, train_reps: 1, ..BenchConfig::default() };
        let pts = run_bench(&base, &ds, &cfg, |_| 10, |_| {}).unwrap();
        assert_eq!(pts.len(), 3);
        assert!(pts.iter().all(|p| p.batch_rows == 24 && p.infer_us > 0.0 && p.train_s > 0.0));
        assert!(timings_csv(&pts).starts_with("L,infer_us,train_s\n8,"));
    }
}
