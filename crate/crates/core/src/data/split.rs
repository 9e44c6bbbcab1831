use crate::data::dataset::TimeSeriesDataset;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Default train:validation:test proportions.
pub const DEFAULT_RATIOS: [f64; 3] = [0.7, 0.1, 0.2];

/// Guards the floor against representation error such as `0.7 * 10`.
const FLOOR_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Segment {
    Train,
    Val,
    Test,
}

impl std::str::FromStr for Segment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Segment::Train),
            "val" | "validation" => Ok(Segment::Val),
            "test" => Ok(Segment::Test),
            other => Err(Error::Config(format!("unknown segment `{other}`"))),
        }
    }
}

/// Chronological split of a timeline of `len` steps into
/// `[0, train_end)`, `[train_end, val_end)`, `[val_end, len)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SplitSpec {
    pub train_end: usize,
    pub val_end: usize,
    pub len: usize,
}

impl SplitSpec {
    pub fn bounds(&self, segment: Segment) -> (usize, usize) {
        match segment {
            Segment::Train => (0, self.train_end),
            Segment::Val => (self.train_end, self.val_end),
            Segment::Test => (self.val_end, self.len),
        }
    }

    /// Every segment must hold at least one full `lookback + horizon` span.
    pub fn require(&self, lookback: usize, horizon: usize) -> Result<()> {
        for seg in [Segment::Train, Segment::Val, Segment::Test] {
            let (a, b) = self.bounds(seg);
            if b - a < lookback + horizon {
                return Err(Error::Config(format!(
                    "{seg:?} segment has {} steps, fewer than lookback + horizon = {}",
                    b - a,
                    lookback + horizon
                )));
            }
        }
        Ok(())
    }
}

pub fn split(len: usize, ratios: [f64; 3]) -> Result<SplitSpec> {
    if ratios.iter().any(|r| r.is_nan() || *r <= 0.0) || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::Parameter(format!("split ratios must be positive and sum to 1, got {ratios:?}")));
    }
    let train_end = (ratios[0] * len as f64 + FLOOR_SLACK).floor() as usize;
    let val_end = ((ratios[0] + ratios[1]) * len as f64 + FLOOR_SLACK).floor() as usize;
    if !(0 < train_end && train_end < val_end && val_end < len) {
        return Err(Error::Config(format!(
            "{len} steps cannot be split into three nonempty segments with {ratios:?}"
        )));
    }
    Ok(SplitSpec { train_end, val_end, len })
}

/// Standard deviations are floored here.
pub const SCALER_EPS: f64 = 1e-8;

/// Per-series standardization fitted on the training segment.
#[derive(Clone, Debug, PartialEq)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

pub fn fit_scaler(dataset: &TimeSeriesDataset, spec: &SplitSpec) -> Result<Scaler> {
    let n = spec.train_end;
    if n == 0 || n > dataset.len() {
        return Err(Error::Contract(format!("training segment [0, {n}) is empty or out of range")));
    }
    let (mut mean, mut std) = (Vec::new(), Vec::new());
    for i in 0..dataset.num_series() {
        let train = &dataset.series(i)[..n];
        let m = train.iter().sum::<f64>() / n as f64;
        let var = train.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n as f64;
        mean.push(m);
        std.push(var.sqrt().max(SCALER_EPS));
    }
    Ok(Scaler { mean, std })
}

impl Scaler {
    fn map(&self, dataset: &TimeSeriesDataset, f: impl Fn(f64, f64, f64) -> f64) -> Result<TimeSeriesDataset> {
        if self.mean.len() != dataset.num_series() {
            return Err(Error::dim("scaler", &[self.mean.len()], &[dataset.num_series()]));
        }
        let mut out = dataset.clone();
        let t = dataset.len();
        let mut values = Tensor::zeros(&[dataset.num_series(), t]);
        for i in 0..dataset.num_series() {
            for (o, v) in values.row_mut(i).iter_mut().zip(dataset.series(i)) {
                *o = f(*v, self.mean[i], self.std[i]);
            }
        }
        out.values = values;
        Ok(out)
    }

    pub fn apply(&self, dataset: &TimeSeriesDataset) -> Result<TimeSeriesDataset> {
        self.map(dataset, |v, m, s| (v - m) / s)
    }

    pub fn invert(&self, dataset: &TimeSeriesDataset) -> Result<TimeSeriesDataset> {
        self.map(dataset, |v, m, s| v * s + m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::dataset::{parse_timestamp, Frequency};

    fn toy(rows: Vec<Vec<f64>>) -> TimeSeriesDataset {
        let t = rows[0].len();
        let names = (0..rows.len()).map(|i| format!("s{i}")).collect();
        let ts = TimeSeriesDataset::regular_timestamps(parse_timestamp("2020-01-01 00:00").unwrap(), Frequency::Hourly, t);
        TimeSeriesDataset::new(names, Tensor::from_rows(&rows).unwrap(), ts).unwrap()
    }

    #[test]
    fn floor_boundaries() {
        assert_eq!(split(10, DEFAULT_RATIOS).unwrap(), SplitSpec { train_end: 7, val_end: 8, len: 10 });
        let s = split(26304, DEFAULT_RATIOS).unwrap();
        assert_eq!((s.train_end, s.val_end), (26304 * 7 / 10, 26304 * 8 / 10));
        assert_eq!((s.train_end, s.val_end), (18412, 21043));
        assert!(matches!(split(100, [0.33, 0.33, 0.33]), Err(Error::Parameter(_))));
        assert!(split(100, DEFAULT_RATIOS).unwrap().require(60, 20).is_err());
    }

    #[test]
    fn scaler_statistics_and_round_trip() {
        let ds = toy(vec![
            (0..20).map(|i| (i as f64 * 0.9).sin() * 5.0 + 3.0).collect(),
            vec![4.0; 20],
        ]);
        let spec = split(20, DEFAULT_RATIOS).unwrap();
        let sc = fit_scaler(&ds, &spec).unwrap();
        let z = sc.apply(&ds).unwrap();
        let train = &z.series(0)[..spec.train_end];
        let m = train.iter().sum::<f64>() / train.len() as f64;
        let v = train.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / train.len() as f64;
        assert!(m.abs() < 1e-10);
        assert!((v.sqrt() - 1.0).abs() < 1e-8);
        assert!(z.series(1).iter().all(|&x| x == 0.0));
        let back = sc.invert(&z).unwrap();
        for (a, b) in back.values.data().iter().zip(ds.values.data()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn scaler_ignores_post_training_values() {
        let mut ds = toy(vec![(0..30).map(|i| i as f64).collect()]);
        let spec = split(30, DEFAULT_RATIOS).unwrap();
        let before = fit_scaler(&ds, &spec).unwrap();
        for t in spec.train_end..30 {
            ds.values.set2(0, t, 1e6 * t as f64);
        }
        assert_eq!(fit_scaler(&ds, &spec).unwrap(), before);
    }
}
