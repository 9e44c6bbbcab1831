use chrono::{Datelike, NaiveDateTime, Timelike};

use crate::tensor::Tensor;

pub const TIME_FEATURE_NAMES: [&str; 8] = [
    "minute_of_hour",
    "hour_of_day",
    "day_of_week",
    "day_of_month",
    "day_of_year",
    "month_of_year",
    "week_of_year",
    "age",
];

/// Maps a zero-based calendar index in `0..card` to `[-0.5, 0.5]`.
fn scaled(index: u32, card: u32) -> f64 {
    index as f64 / (card - 1) as f64 - 0.5
}

/// Eight calendar covariates per step, each in `[-0.5, 0.5]`. The last
/// column is a linear age index over the whole timeline.
pub fn time_features(timestamps: &[NaiveDateTime]) -> Tensor {
    let t = timestamps.len();
    let mut data = Vec::with_capacity(t * 8);
    for (i, ts) in timestamps.iter().enumerate() {
        let age = if t > 1 { i as f64 / (t - 1) as f64 - 0.5 } else { -0.5 };
        data.extend_from_slice(&[
            scaled(ts.minute(), 60),
            scaled(ts.hour(), 24),
            scaled(ts.weekday().num_days_from_monday(), 7),
            scaled(ts.day0(), 31),
            scaled(ts.ordinal0(), 366),
            scaled(ts.month0(), 12),
            scaled(ts.iso_week().week0(), 53),
            age,
        ]);
    }
    Tensor::new(vec![t, 8], data).expect("8 features per step")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::dataset::{parse_timestamp, Frequency, TimeSeriesDataset};

    #[test]
    fn hour_endpoints_and_constant_minutes() {
        let start = parse_timestamp("2021-03-01 00:00:00").unwrap();
        let ts = TimeSeriesDataset::regular_timestamps(start, Frequency::Hourly, 48);
        let f = time_features(&ts);
        assert_eq!(f.get2(0, 1), -0.5);
        assert_eq!(f.get2(23, 1), 0.5);
        assert!((0..48).all(|i| f.get2(i, 0) == -0.5));
        assert_eq!(f.get2(0, 7), -0.5);
        assert_eq!(f.get2(47, 7), 0.5);
        assert!(f.data().iter().all(|v| (-0.5..=0.5).contains(v)));
    }

    #[test]
    fn periodic_columns_repeat() {
        let start = parse_timestamp("2021-01-04 00:00:00").unwrap();
        let ts = TimeSeriesDataset::regular_timestamps(start, Frequency::FifteenMinutes, 4 * 24 * 15);
        let f = time_features(&ts);
        let day = 4 * 24;
        for i in 0..day * 7 {
            assert_eq!(f.get2(i, 0), f.get2(i + 4, 0));
            assert_eq!(f.get2(i, 1), f.get2(i + day, 1));
            assert_eq!(f.get2(i, 2), f.get2(i + 7 * day, 2));
        }
        assert_eq!(f.get2(3, 0), 45.0 / 59.0 - 0.5);
    }
}
