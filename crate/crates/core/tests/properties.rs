use nalgebra::DMatrix;
use proptest::prelude::*;

use tide::data::dataset::{parse_timestamp, Frequency, TimeSeriesDataset};
use tide::data::split::{fit_scaler, split};
use tide::data::windows::{build_batch, enumerate_windows, WindowPolicy};
use tide::eval::metrics::{mae, mse};
use tide::eval::rolling::evaluate_windows;
use tide::model::config::{ModelConfig, Variant};
use tide::model::tide::{revin_denormalize, revin_normalize, TiDEParams};
use tide::tensor::Tensor;

fn dataset(num_series: usize, values: Vec<f64>) -> TimeSeriesDataset {
    let len = values.len() / num_series;
    let ts = TimeSeriesDataset::regular_timestamps(parse_timestamp("2020-06-01 00:00").unwrap(), Frequency::Hourly, len);
    let names = (0..num_series).map(|i| format!("s{i}")).collect();
    TimeSeriesDataset::new(names, Tensor::new(vec![num_series, len], values).unwrap(), ts).unwrap()
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, rows * cols)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matmul_agrees_with_nalgebra((m, k, n, a, b) in (1usize..12, 1usize..12, 1usize..12)
        .prop_flat_map(|(m, k, n)| (Just(m), Just(k), Just(n), matrix(m, k), matrix(k, n))))
    {
        let got = Tensor::new(vec![m, k], a.clone()).unwrap().matmul(&Tensor::new(vec![k, n], b.clone()).unwrap()).unwrap();
        let want = DMatrix::from_row_slice(m, k, &a) * DMatrix::from_row_slice(k, n, &b);
        for i in 0..m {
            for j in 0..n {
                prop_assert!((got.get2(i, j) - want[(i, j)]).abs() <= 1e-12 * (1.0 + want[(i, j)].abs()));
            }
        }
    }

    #[test]
    fn window_counts_follow_the_closed_form(
        n in 1usize..5, start in 0usize..40, seg in 1usize..80, l in 1usize..30, h in 1usize..30,
    ) {
        let end = start + seg;
        let contained = enumerate_windows(n, start, end, l, h, WindowPolicy::Contained);
        prop_assert_eq!(contained.len(), n * (seg + 1).saturating_sub(l + h));
        for w in &contained {
            prop_assert!(w.anchor >= start + l && w.anchor + h <= end);
        }
        let extended = enumerate_windows(n, start, end, l, h, WindowPolicy::ExtendIntoPrevious);
        let first = start.max(l);
        prop_assert_eq!(extended.len(), n * (end + 1).saturating_sub(h).saturating_sub(first));
        for w in &extended {
            prop_assert!(w.anchor >= l && w.anchor >= start && w.anchor + h <= end);
        }
    }

    #[test]
    fn split_segments_are_ordered_and_cover_the_timeline(len in 10usize..100_000) {
        let s = split(len, [0.7, 0.1, 0.2]).unwrap();
        prop_assert!(0 < s.train_end && s.train_end < s.val_end && s.val_end < len);
        prop_assert_eq!(s.train_end, len * 7 / 10);
        prop_assert_eq!(s.val_end, len * 8 / 10);
    }

    #[test]
    fn scaler_round_trips(values in prop::collection::vec(-1e3f64..1e3, 3 * 40)) {
        let ds = dataset(3, values);
        let spec = split(ds.len(), [0.7, 0.1, 0.2]).unwrap();
        let scaler = fit_scaler(&ds, &spec).unwrap();
        let back = scaler.invert(&scaler.apply(&ds).unwrap()).unwrap();
        for i in 0..3 {
            for (a, b) in ds.series(i).iter().zip(back.series(i)) {
                prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
            }
        }
    }

    #[test]
    fn revin_round_trips(rows in 1usize..6, values in prop::collection::vec(-1e3f64..1e3, 6 * 20)) {
        let x = Tensor::new(vec![rows, 20], values[..rows * 20].to_vec()).unwrap();
        let (z, stats) = revin_normalize(&x);
        let back = revin_denormalize(&z, &stats).unwrap();
        for (a, b) in x.data().iter().zip(back.data()) {
            prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn evaluation_ignores_batch_partition(batch_size in 1usize..300, seed in 0u64..1000) {
        let t = 160;
        let values: Vec<f64> = (0..3 * t).map(|v| ((v * 7919 + seed as usize) % 97) as f64 / 20.0 - 2.0).collect();
        let ds = dataset(3, values).with_time_features().unwrap();
        let mut cfg = ModelConfig::small(16, 6, ds.covariate_dim());
        cfg.rev_in = true;
        cfg.layer_norm = true;
        cfg.num_series = 3;
        let model = TiDEParams::init(&cfg, Variant::Full, seed).unwrap();
        let windows = enumerate_windows(3, 100, t, 16, 6, WindowPolicy::ExtendIntoPrevious);

        let whole = build_batch(&ds, &windows, 16, 6).unwrap();
        let pred = model.forward(&whole, &mut tide::tape::Mode::Eval).unwrap();
        let (naive_mse, naive_mae) = (mse(&pred, &whole.target).unwrap(), mae(&pred, &whole.target).unwrap());

        let report = evaluate_windows(&model, &ds, &windows, batch_size).unwrap();
        prop_assert_eq!(report.window_count, windows.len());
        prop_assert!((report.mse - naive_mse).abs() <= 1e-12 * naive_mse.max(1.0));
        prop_assert!((report.mae - naive_mae).abs() <= 1e-12 * naive_mae.max(1.0));
    }
}
