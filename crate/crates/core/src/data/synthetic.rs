//! Electricity-like load curves for runs without the benchmark files.

use chrono::{Datelike, NaiveDateTime, Timelike};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::data::dataset::{Frequency, TimeSeriesDataset};
use crate::error::Result;
use crate::tensor::Tensor;

/// Positive series with daily and weekly cycles, a per-series level, phase
/// and amplitude, and AR(1) noise.
pub fn synthetic_load(
    num_series: usize,
    len: usize,
    frequency: Frequency,
    start: NaiveDateTime,
    seed: u64,
) -> Result<TimeSeriesDataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let stamps = TimeSeriesDataset::regular_timestamps(start, frequency, len);
    let noise = Normal::new(0.0, 1.0).expect("unit normal");
    let mut values = Vec::with_capacity(num_series * len);
    for _ in 0..num_series {
        let level = rng.random_range(50.0..500.0);
        let daily = rng.random_range(0.2..0.5);
        let weekly = rng.random_range(0.05..0.2);
        let phase = rng.random_range(0.0..std::f64::consts::TAU);
        let sigma = rng.random_range(0.02..0.06);
        let mut ar = 0.0;
        for ts in &stamps {
            let hour = ts.hour() as f64 + ts.minute() as f64 / 60.0;
            let day = ts.weekday().num_days_from_monday() as f64 + hour / 24.0;
            let tau = std::f64::consts::TAU;
            ar = 0.8 * ar + sigma * noise.sample(&mut rng);
            let shape = 1.0 + daily * (tau * hour / 24.0 + phase).sin() + weekly * (tau * day / 7.0).cos() + ar;
            values.push(level * shape.max(0.05));
        }
    }
    let names = (0..num_series).map(|i| format!("MT_{:03}", i + 1)).collect();
    TimeSeriesDataset::new(names, Tensor::new(vec![num_series, len], values)?, stamps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::dataset::parse_timestamp;

    #[test]
    fn shape_positivity_and_determinism() {
        let start = parse_timestamp("2016-07-01 00:00").unwrap();
        let a = synthetic_load(3, 200, Frequency::Hourly, start, 4).unwrap();
        let b = synthetic_load(3, 200, Frequency::Hourly, start, 4).unwrap();
        assert_eq!(a.values, b.values);
        assert_eq!((a.num_series(), a.len()), (3, 200));
        assert!(a.values.data().iter().all(|&v| v > 0.0));
        let day0 = &a.series(0)[..24];
        let day1 = &a.series(0)[24..48];
        let corr: f64 = day0.iter().zip(day1).map(|(x, y)| x * y).sum::<f64>()
            / (day0.iter().map(|x| x * x).sum::<f64>() * day1.iter().map(|y| y * y).sum::<f64>()).sqrt();
        assert!(corr > 0.9, "{corr}");
    }
}
