use crate::data::dataset::TimeSeriesDataset;
use crate::data::split::{Segment, SplitSpec};
use crate::data::windows::{build_batch, enumerate_windows, Window, WindowBatch, WindowPolicy};
use crate::error::{Error, Result};
use crate::eval::metrics::{MetricsAccumulator, MetricsReport};
use crate::model::tide::TiDEParams;
use crate::tape::Mode;
use crate::tensor::Tensor;

/// Windows per forward pass during evaluation.
pub const EVAL_BATCH: usize = 512;

/// Anything that maps a window batch to `[B, H]` predictions.
pub trait Forecaster {
    fn lookback(&self) -> usize;
    fn horizon(&self) -> usize;
    fn predict(&self, batch: &WindowBatch) -> Result<Tensor>;
}

impl Forecaster for TiDEParams {
    fn lookback(&self) -> usize {
        self.config.lookback
    }

    fn horizon(&self) -> usize {
        self.config.horizon
    }

    fn predict(&self, batch: &WindowBatch) -> Result<Tensor> {
        self.forward(batch, &mut Mode::Eval)
    }
}

/// Returns the ground truth; a zero-error reference.
#[derive(Clone, Copy, Debug)]
pub struct LeakedTarget {
    pub lookback: usize,
    pub horizon: usize,
}

impl Forecaster for LeakedTarget {
    fn lookback(&self) -> usize {
        self.lookback
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn predict(&self, batch: &WindowBatch) -> Result<Tensor> {
        Ok(batch.target.clone())
    }
}

/// Metrics over the given windows, restricted to entries where
/// `mask[series · T + step]` holds (all entries when `mask` is `None`).
pub fn evaluate_windows_masked<F: Forecaster + ?Sized>(
    model: &F,
    dataset: &TimeSeriesDataset,
    windows: &[Window],
    batch_size: usize,
    mask: Option<&[bool]>,
) -> Result<MetricsReport> {
    if windows.is_empty() {
        return Err(Error::Config("no windows to evaluate".into()));
    }
    let (l, h) = (model.lookback(), model.horizon());
    let t = dataset.len();
    let mut acc = MetricsAccumulator::new(h);
    for chunk in windows.chunks(batch_size.max(1)) {
        let batch = build_batch(dataset, chunk, l, h)?;
        let pred = model.predict(&batch)?;
        match mask {
            None => acc.add(&pred, &batch.target)?,
            Some(m) => acc.add_masked(&pred, &batch.target, |r, j| m[chunk[r].series * t + chunk[r].anchor + j])?,
        }
    }
    acc.finish()
}

pub fn evaluate_windows<F: Forecaster + ?Sized>(
    model: &F,
    dataset: &TimeSeriesDataset,
    windows: &[Window],
    batch_size: usize,
) -> Result<MetricsReport> {
    evaluate_windows_masked(model, dataset, windows, batch_size, None)
}

/// Every stride-1 window of a segment under an explicit policy.
pub fn rolling_evaluate_with<F: Forecaster + ?Sized>(
    model: &F,
    dataset: &TimeSeriesDataset,
    spec: &SplitSpec,
    segment: Segment,
    policy: WindowPolicy,
) -> Result<MetricsReport> {
    let (start, end) = spec.bounds(segment);
    let windows = enumerate_windows(dataset.num_series(), start, end, model.lookback(), model.horizon(), policy);
    if windows.is_empty() {
        return Err(Error::Config(format!("{segment:?} segment admits no evaluation window")));
    }
    evaluate_windows(model, dataset, &windows, EVAL_BATCH)
}

/// Rolling evaluation; validation and test look-backs may reach into the
/// preceding segment.
pub fn rolling_evaluate<F: Forecaster + ?Sized>(
    model: &F,
    dataset: &TimeSeriesDataset,
    spec: &SplitSpec,
    segment: Segment,
) -> Result<MetricsReport> {
    rolling_evaluate_with(model, dataset, spec, segment, WindowPolicy::for_segment(segment))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::dataset::{parse_timestamp, Frequency};
    use crate::model::config::{ModelConfig, Variant};

    fn toy(n: usize, t: usize) -> TimeSeriesDataset {
        let ts = TimeSeriesDataset::regular_timestamps(parse_timestamp("2020-01-01 00:00").unwrap(), Frequency::Hourly, t);
        let values = Tensor::new(vec![n, t], (0..n * t).map(|v| ((v * 37) % 11) as f64 - 5.0).collect()).unwrap();
        TimeSeriesDataset::new((0..n).map(|i| format!("s{i}")).collect(), values, ts).unwrap()
    }

    #[test]
    fn leaked_target_scores_zero() {
        let ds = toy(2, 60);
        let spec = SplitSpec { train_end: 40, val_end: 48, len: 60 };
        let r = rolling_evaluate(&LeakedTarget { lookback: 6, horizon: 3 }, &ds, &spec, Segment::Test).unwrap();
        assert_eq!((r.mse, r.mae), (0.0, 0.0));
        assert_eq!(r.window_count, 2 * (60 - 3 - 48 + 1));
    }

    #[test]
    fn exact_span_has_one_window_per_series() {
        let ds = toy(3, 30);
        let spec = SplitSpec { train_end: 10, val_end: 19, len: 30 };
        let r = rolling_evaluate_with(&LeakedTarget { lookback: 6, horizon: 3 }, &ds, &spec, Segment::Val, WindowPolicy::Contained)
            .unwrap();
        assert_eq!(r.window_count, 3);
    }

    #[test]
    fn batching_does_not_change_metrics() {
        let ds = toy(3, 50);
        let cfg = ModelConfig::small(5, 2, 0);
        let m = TiDEParams::init(&cfg, Variant::Full, 1).unwrap();
        let w = enumerate_windows(3, 0, 50, 5, 2, WindowPolicy::Contained);
        let a = evaluate_windows(&m, &ds, &w, 1).unwrap();
        let b = evaluate_windows(&m, &ds, &w, 1000).unwrap();
        assert!((a.mse - b.mse).abs() < 1e-12 * a.mse.max(1.0));
        assert_eq!(a.window_count, b.window_count);
    }
}
