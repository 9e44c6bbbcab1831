use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use crate::data::dataset::TimeSeriesDataset;
use crate::data::split::{Segment, SplitSpec};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Which anchors of a segment are admissible.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WindowPolicy {
    /// Look-back and horizon both inside the segment.
    Contained,
    /// Horizon inside the segment; the look-back may reach into earlier steps.
    ExtendIntoPrevious,
}

impl WindowPolicy {
    pub fn for_segment(segment: Segment) -> Self {
        match segment {
            Segment::Train => WindowPolicy::Contained,
            Segment::Val | Segment::Test => WindowPolicy::ExtendIntoPrevious,
        }
    }
}

/// One (series, anchor) pair; `anchor` is the first horizon step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Window {
    pub series: usize,
    pub anchor: usize,
}

/// Admissible anchors in `[start, end)` as a half-open range.
pub fn anchor_range(start: usize, end: usize, lookback: usize, horizon: usize, policy: WindowPolicy) -> (usize, usize) {
    let first = match policy {
        WindowPolicy::Contained => start + lookback,
        WindowPolicy::ExtendIntoPrevious => start.max(lookback),
    };
    let last_excl = (end + 1).saturating_sub(horizon);
    (first, last_excl.max(first))
}

/// Every admissible window, series-major then anchor order.
pub fn enumerate_windows(
    num_series: usize,
    start: usize,
    end: usize,
    lookback: usize,
    horizon: usize,
    policy: WindowPolicy,
) -> Vec<Window> {
    let (a, b) = anchor_range(start, end, lookback, horizon, policy);
    (0..num_series)
        .flat_map(|series| (a..b).map(move |anchor| Window { series, anchor }))
        .collect()
}

/// Aligned look-back / horizon / covariate slices for a set of windows.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowBatch {
    /// `[B, L]`
    pub lookback: Tensor,
    /// `[B, H]`
    pub target: Tensor,
    /// `[B, L + H, r]`
    pub covariates: Tensor,
    /// `[B, s]`
    pub static_attrs: Tensor,
    pub series_index: Vec<usize>,
    pub anchor: Vec<usize>,
}

impl WindowBatch {
    pub fn len(&self) -> usize {
        self.series_index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series_index.is_empty()
    }

    pub fn lookback_len(&self) -> usize {
        self.lookback.cols()
    }

    pub fn horizon_len(&self) -> usize {
        self.target.cols()
    }

    pub fn covariate_dim(&self) -> usize {
        self.covariates.shape()[2]
    }
}

pub fn build_batch(
    dataset: &TimeSeriesDataset,
    windows: &[Window],
    lookback: usize,
    horizon: usize,
) -> Result<WindowBatch> {
    let b = windows.len();
    let r = dataset.covariate_dim();
    let s = dataset.static_dim();
    let span = lookback + horizon;
    let mut past = Vec::with_capacity(b * lookback);
    let mut future = Vec::with_capacity(b * horizon);
    let mut cov = Vec::with_capacity(b * span * r);
    let mut stat = Vec::with_capacity(b * s);
    for w in windows {
        if w.series >= dataset.num_series() || w.anchor < lookback || w.anchor + horizon > dataset.len() {
            return Err(Error::Contract(format!(
                "window {w:?} does not fit a dataset of {} series × {} steps",
                dataset.num_series(),
                dataset.len()
            )));
        }
        let y = dataset.series(w.series);
        past.extend_from_slice(&y[w.anchor - lookback..w.anchor]);
        future.extend_from_slice(&y[w.anchor..w.anchor + horizon]);
        let c = dataset.covariates.data();
        cov.extend_from_slice(&c[(w.anchor - lookback) * r..(w.anchor + horizon) * r]);
        stat.extend_from_slice(dataset.static_attrs.row(w.series));
    }
    Ok(WindowBatch {
        lookback: Tensor::new(vec![b, lookback], past)?,
        target: Tensor::new(vec![b, horizon], future)?,
        covariates: Tensor::new(vec![b, span, r], cov)?,
        static_attrs: Tensor::new(vec![b, s], stat)?,
        series_index: windows.iter().map(|w| w.series).collect(),
        anchor: windows.iter().map(|w| w.anchor).collect(),
    })
}

/// One shuffled pass over every admissible window of a segment.
pub struct EpochBatches<'a> {
    dataset: &'a TimeSeriesDataset,
    windows: Vec<Window>,
    batch_size: usize,
    lookback: usize,
    horizon: usize,
    pos: usize,
}

impl EpochBatches<'_> {
    pub fn windows(&self) -> &[Window] {
        &self.windows
    }

    pub fn num_batches(&self) -> usize {
        self.windows.len().div_ceil(self.batch_size)
    }
}

impl Iterator for EpochBatches<'_> {
    type Item = WindowBatch;

    fn next(&mut self) -> Option<WindowBatch> {
        if self.pos >= self.windows.len() {
            return None;
        }
        let end = (self.pos + self.batch_size).min(self.windows.len());
        let batch = build_batch(self.dataset, &self.windows[self.pos..end], self.lookback, self.horizon)
            .expect("enumerated windows fit the dataset");
        self.pos = end;
        Some(batch)
    }
}

pub fn make_batches<'a>(
    dataset: &'a TimeSeriesDataset,
    spec: &SplitSpec,
    segment: Segment,
    lookback: usize,
    horizon: usize,
    batch_size: usize,
    rng: &mut ChaCha8Rng,
) -> Result<EpochBatches<'a>> {
    if batch_size == 0 {
        return Err(Error::Config("batch size must be at least 1".into()));
    }
    let (start, end) = spec.bounds(segment);
    let mut windows = enumerate_windows(
        dataset.num_series(),
        start,
        end.min(dataset.len()),
        lookback,
        horizon,
        WindowPolicy::for_segment(segment),
    );
    if windows.is_empty() {
        return Err(Error::Config(format!(
            "{segment:?} segment [{start}, {end}) admits no window with lookback {lookback} and horizon {horizon}"
        )));
    }
    windows.shuffle(rng);
    Ok(EpochBatches { dataset, windows, batch_size, lookback, horizon, pos: 0 })
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;

    use super::*;
    use crate::data::dataset::{parse_timestamp, Frequency};

    pub(crate) fn toy(n: usize, t: usize) -> TimeSeriesDataset {
        let ts = TimeSeriesDataset::regular_timestamps(parse_timestamp("2020-01-01 00:00").unwrap(), Frequency::Hourly, t);
        let values = Tensor::new(vec![n, t], (0..n * t).map(|v| v as f64).collect()).unwrap();
        let names = (0..n).map(|i| format!("s{i}")).collect();
        TimeSeriesDataset::new(names, values, ts).unwrap().with_time_features().unwrap()
    }

    #[test]
    fn six_windows_in_length_ten_segment() {
        let ds = toy(1, 12);
        let spec = SplitSpec { train_end: 10, val_end: 11, len: 12 };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let it = make_batches(&ds, &spec, Segment::Train, 3, 2, 4, &mut rng).unwrap();
        assert_eq!(it.windows().len(), 6);
        assert_eq!(it.num_batches(), 2);
        let sizes: Vec<usize> = it.map(|b| b.len()).collect();
        assert_eq!(sizes, vec![4, 2]);
    }

    #[test]
    fn rows_are_contiguous_slices() {
        let ds = toy(3, 40);
        let spec = SplitSpec { train_end: 28, val_end: 32, len: 40 };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for batch in make_batches(&ds, &spec, Segment::Test, 5, 3, 7, &mut rng).unwrap() {
            for row in 0..batch.len() {
                let (i, t) = (batch.series_index[row], batch.anchor[row]);
                let mut joined = batch.lookback.row(row).to_vec();
                joined.extend_from_slice(batch.target.row(row));
                assert_eq!(&joined[..], &ds.series(i)[t - 5..t + 3]);
                let r = ds.covariate_dim();
                let c = &batch.covariates.data()[row * 8 * r..(row + 1) * 8 * r];
                assert_eq!(c, &ds.covariates.data()[(t - 5) * r..(t + 3) * r]);
            }
        }
    }

    #[test]
    fn same_seed_same_order() {
        let ds = toy(2, 30);
        let spec = SplitSpec { train_end: 21, val_end: 24, len: 30 };
        let order = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            make_batches(&ds, &spec, Segment::Train, 4, 2, 5, &mut rng).unwrap().windows().to_vec()
        };
        assert_eq!(order(3), order(3));
        assert_ne!(order(3), order(4));
    }

    #[test]
    fn no_window_is_config_error() {
        let ds = toy(1, 12);
        let spec = SplitSpec { train_end: 4, val_end: 8, len: 12 };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            make_batches(&ds, &spec, Segment::Train, 3, 2, 4, &mut rng),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn extended_policy_reaches_back() {
        let w = enumerate_windows(1, 20, 30, 8, 4, WindowPolicy::ExtendIntoPrevious);
        assert_eq!(w.first().unwrap().anchor, 20);
        assert_eq!(w.last().unwrap().anchor, 26);
        assert_eq!(enumerate_windows(1, 2, 30, 8, 4, WindowPolicy::ExtendIntoPrevious)[0].anchor, 8);
    }
}
