use tide::data::dataset::{parse_timestamp, Frequency, TimeSeriesDataset};
use tide::data::split::{split, Segment, SplitSpec};
use tide::data::windows::{enumerate_windows, WindowPolicy};
use tide::eval::rolling::{evaluate_windows, rolling_evaluate, EVAL_BATCH};
use tide::eval::train::{train_loop, TrainConfig};
use tide::model::config::{ModelConfig, Variant};
use tide::model::tide::TiDEParams;
use tide::tensor::Tensor;

/// Sums of two sinusoids obey an order-4 linear recurrence, so every
/// horizon is an exact linear function of the preceding look-back.
fn recurrent_dataset(num_series: usize, len: usize) -> (TimeSeriesDataset, SplitSpec) {
    let mut values = Vec::with_capacity(num_series * len);
    for i in 0..num_series {
        let phase = 0.7 * i as f64;
        values.extend((0..len).map(|t| {
            let t = t as f64;
            (2.0 * std::f64::consts::PI * t / 24.0 + phase).sin() + 0.5 * (2.0 * std::f64::consts::PI * t / 9.0).cos()
        }));
    }
    let ts = TimeSeriesDataset::regular_timestamps(parse_timestamp("2021-01-01 00:00").unwrap(), Frequency::Hourly, len);
    let names = (0..num_series).map(|i| format!("s{i}")).collect();
    let ds = TimeSeriesDataset::new(names, Tensor::new(vec![num_series, len], values).unwrap(), ts).unwrap();
    let spec = split(len, [0.7, 0.1, 0.2]).unwrap();
    (ds, spec)
}

fn model_config() -> ModelConfig {
    let mut cfg = ModelConfig::small(24, 8, 0);
    cfg.hidden_size = 32;
    cfg.num_series = 2;
    cfg
}

fn train_windows(cfg: &ModelConfig, ds: &TimeSeriesDataset, spec: &SplitSpec) -> Vec<tide::data::windows::Window> {
    let (a, b) = spec.bounds(Segment::Train);
    enumerate_windows(ds.num_series(), a, b, cfg.lookback, cfg.horizon, WindowPolicy::Contained)
}

#[test]
fn linear_target_is_learned_within_fifty_epochs() {
    let (ds, spec) = recurrent_dataset(2, 600);
    let cfg = model_config();
    let tcfg = TrainConfig { max_epochs: 50, patience: 50, batch_size: 32, seed: 0, learning_rate: 1e-2 };
    let outcome = train_loop(&cfg, Variant::Full, &tcfg, &ds, &spec).unwrap();
    let best_train = outcome.history.iter().map(|r| r.train_mse).fold(f64::INFINITY, f64::min);
    assert!(best_train < 1e-3, "lowest train mse {best_train}");
}

#[test]
fn one_epoch_improves_on_initialization() {
    let (ds, spec) = recurrent_dataset(2, 600);
    let cfg = model_config();
    let tcfg = TrainConfig { max_epochs: 1, patience: 1, batch_size: 32, seed: 3, learning_rate: 1e-3 };
    let init = TiDEParams::init(&cfg, Variant::Full, tcfg.seed).unwrap();
    let init_mse = evaluate_windows(&init, &ds, &train_windows(&cfg, &ds, &spec), EVAL_BATCH).unwrap().mse;
    let outcome = train_loop(&cfg, Variant::Full, &tcfg, &ds, &spec).unwrap();
    assert!(outcome.history[0].train_mse < init_mse, "{} vs {init_mse}", outcome.history[0].train_mse);
}

#[test]
fn returned_parameters_have_the_best_validation_error() {
    let (ds, spec) = recurrent_dataset(2, 600);
    let cfg = model_config();
    let tcfg = TrainConfig { max_epochs: 6, patience: 6, batch_size: 64, seed: 1, learning_rate: 3e-2 };
    let outcome = train_loop(&cfg, Variant::Full, &tcfg, &ds, &spec).unwrap();
    let min_val = outcome.history.iter().map(|r| r.val_mse).fold(f64::INFINITY, f64::min);
    assert_eq!(outcome.best_val_mse, min_val);
    assert_eq!(outcome.history[outcome.best_epoch].val_mse, min_val);
    let again = rolling_evaluate(&outcome.model, &ds, &spec, Segment::Val).unwrap().mse;
    assert_eq!(again, min_val);
}

#[test]
fn every_variant_trains_and_repeats_exactly() {
    let (ds, spec) = recurrent_dataset(2, 400);
    let cfg = model_config();
    let tcfg = TrainConfig { max_epochs: 2, patience: 2, batch_size: 64, seed: 5, learning_rate: 1e-3 };
    for variant in [Variant::Full, Variant::NoTemporalDecoder, Variant::NoResiduals, Variant::LinearOnly] {
        let a = train_loop(&cfg, variant, &tcfg, &ds, &spec).unwrap();
        let b = train_loop(&cfg, variant, &tcfg, &ds, &spec).unwrap();
        assert_eq!(a.history_csv(), b.history_csv(), "{variant}");
    }
}
