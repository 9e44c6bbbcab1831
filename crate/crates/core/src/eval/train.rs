use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::dataset::TimeSeriesDataset;
use crate::data::split::{Segment, SplitSpec};
use crate::data::windows::{build_batch, enumerate_windows, Window, WindowPolicy};
use crate::error::{Error, Result};
use crate::eval::rolling::{evaluate_windows, EVAL_BATCH};
use crate::model::config::{ModelConfig, Variant};
use crate::model::tide::TiDEParams;
use crate::optim::{adam_update, cosine_lr, AdamState, ScheduleConfig};
use crate::tape::{Mode, Tape};

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub patience: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Peak of the cosine schedule.
    pub learning_rate: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { max_epochs: 100, patience: 10, batch_size: 512, seed: 0, learning_rate: 1e-3 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_epochs == 0 || self.batch_size == 0 || self.patience == 0 {
            return Err(Error::Config("max_epochs, patience and batch_size must be positive".into()));
        }
        if self.patience > self.max_epochs {
            return Err(Error::Config(format!(
                "patience {} exceeds max_epochs {}",
                self.patience, self.max_epochs
            )));
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return Err(Error::Config(format!("learning_rate must be positive, got {}", self.learning_rate)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_mse: f64,
    pub val_mse: f64,
    /// Rate at the last step of the epoch.
    pub lr: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Parameters of the epoch with the lowest validation error.
    pub model: TiDEParams,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_mse: f64,
}

impl TrainOutcome {
    pub fn history_csv(&self) -> String {
        let mut s = String::from("epoch,train_mse,val_mse,lr\n");
        for r in &self.history {
            s.push_str(&format!("{},{},{},{}\n", r.epoch, r.train_mse, r.val_mse, r.lr));
        }
        s
    }
}

/// Mini-batch Adam with a cosine schedule and early stopping on the
/// validation segment.
pub fn train_loop(
    cfg: &ModelConfig,
    variant: Variant,
    tcfg: &TrainConfig,
    dataset: &TimeSeriesDataset,
    spec: &SplitSpec,
) -> Result<TrainOutcome> {
    let windows = |seg: Segment| {
        let (a, b) = spec.bounds(seg);
        enumerate_windows(dataset.num_series(), a, b, cfg.lookback, cfg.horizon, WindowPolicy::for_segment(seg))
    };
    train_on_windows(cfg, variant, tcfg, dataset, &windows(Segment::Train), &windows(Segment::Val), |_| {})
}

/// As [`train_loop`] over explicit window lists; `on_epoch` sees every
/// history record as it is produced.
pub fn train_on_windows(
    cfg: &ModelConfig,
    variant: Variant,
    tcfg: &TrainConfig,
    dataset: &TimeSeriesDataset,
    train: &[Window],
    val: &[Window],
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainOutcome> {
    tcfg.validate()?;
    cfg.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(Error::Config(format!(
            "need training and validation windows, got {} and {}",
            train.len(),
            val.len()
        )));
    }
    if dataset.covariate_dim() != cfg.covariate_dim || dataset.static_dim() != cfg.static_dim {
        return Err(Error::Config(format!(
            "dataset has {} covariates and {} static attributes, the model expects {} and {}",
            dataset.covariate_dim(),
            dataset.static_dim(),
            cfg.covariate_dim,
            cfg.static_dim
        )));
    }
    if cfg.rev_in && dataset.num_series() > cfg.num_series {
        return Err(Error::Config(format!(
            "num_series = {} but the dataset has {} series",
            cfg.num_series,
            dataset.num_series()
        )));
    }

    let mut model = TiDEParams::init(cfg, variant, tcfg.seed)?;
    let mut adam = AdamState::new(model.store.tensors());
    let batches_per_epoch = train.len().div_ceil(tcfg.batch_size);
    let schedule = ScheduleConfig::new(tcfg.learning_rate, (tcfg.max_epochs * batches_per_epoch) as u64)?;
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(tcfg.seed);
    shuffle_rng.set_stream(1);
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(tcfg.seed);
    dropout_rng.set_stream(2);

    let mut order = train.to_vec();
    let mut history = Vec::new();
    let mut best: Option<(usize, f64, Vec<crate::tensor::Tensor>)> = None;
    let mut step: u64 = 0;
    for epoch in 0..tcfg.max_epochs {
        order.shuffle(&mut shuffle_rng);
        let (mut loss_sum, mut seen, mut lr) = (0.0, 0usize, 0.0);
        for chunk in order.chunks(tcfg.batch_size) {
            let batch = build_batch(dataset, chunk, cfg.lookback, cfg.horizon)?;
            let mut tape = Tape::new();
            let vars = model.store.register(&mut tape);
            let pred = model.forward_on_tape(&mut tape, &vars, &batch, &mut Mode::Train(&mut dropout_rng))?;
            let target = tape.constant(batch.target.clone());
            let loss = tape.mse_loss(pred, target)?;
            let loss_value = tape.value(loss).item();
            if !loss_value.is_finite() {
                return Err(Error::Divergence { epoch, step: step as usize, loss: loss_value });
            }
            let mut grads = tape.backward(loss)?;
            let g: Vec<_> = vars
                .iter()
                .zip(model.store.tensors())
                .map(|(v, p)| grads.take_or_zeros(*v, p.shape()))
                .collect();
            drop(tape);
            lr = cosine_lr(step, &schedule)?;
            if lr > 0.0 {
                adam_update(model.store.tensors_mut(), &g, &mut adam, lr)?;
            }
            step += 1;
            loss_sum += loss_value * chunk.len() as f64;
            seen += chunk.len();
        }
        if model.store.tensors().iter().any(|t| !t.is_finite()) {
            return Err(Error::Divergence { epoch, step: step as usize, loss: f64::NAN });
        }
        let val_mse = evaluate_windows(&model, dataset, val, EVAL_BATCH)?.mse;
        let record = EpochRecord { epoch, train_mse: loss_sum / seen as f64, val_mse, lr };
        on_epoch(&record);
        history.push(record);
        let improved = match &best {
            None => true,
            Some((_, b, _)) => val_mse < *b,
        };
        if improved {
            best = Some((epoch, val_mse, model.store.tensors().to_vec()));
        } else if epoch - best.as_ref().map_or(0, |b| b.0) >= tcfg.patience {
            break;
        }
    }
    let (best_epoch, best_val_mse, tensors) = best.expect("at least one epoch ran");
    model.store.replace_all(tensors)?;
    Ok(TrainOutcome { model, history, best_epoch, best_val_mse })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::dataset::{parse_timestamp, Frequency};
    use crate::tensor::Tensor;

    fn sine_dataset() -> TimeSeriesDataset {
        let t = 200;
        let ts = TimeSeriesDataset::regular_timestamps(parse_timestamp("2020-01-01 00:00").unwrap(), Frequency::Hourly, t);
        let values = Tensor::new(
            vec![2, t],
            (0..2 * t).map(|v| ((v % t) as f64 * 0.3 + (v / t) as f64).sin()).collect(),
        )
        .unwrap();
        TimeSeriesDataset::new(vec!["a".into(), "b".into()], values, ts).unwrap()
    }

    #[test]
    fn deterministic_and_best_checkpoint() {
        let ds = sine_dataset();
        let spec = crate::data::split::split(200, crate::data::split::DEFAULT_RATIOS).unwrap();
        let cfg = ModelConfig::small(12, 4, 0);
        let tcfg = TrainConfig { max_epochs: 6, patience: 3, batch_size: 32, seed: 5, learning_rate: 3e-3 };
        let a = train_loop(&cfg, Variant::Full, &tcfg, &ds, &spec).unwrap();
        let b = train_loop(&cfg, Variant::Full, &tcfg, &ds, &spec).unwrap();
        assert_eq!(a.history, b.history);
        let min = a.history.iter().map(|r| r.val_mse).fold(f64::INFINITY, f64::min);
        assert_eq!(a.best_val_mse, min);
        let windows = enumerate_windows(2, spec.train_end, spec.val_end, 12, 4, WindowPolicy::ExtendIntoPrevious);
        let again = evaluate_windows(&a.model, &ds, &windows, 7).unwrap().mse;
        assert!((again - min).abs() < 1e-12);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let bad = TrainConfig { patience: 20, max_epochs: 10, ..TrainConfig::default() };
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn divergence_is_reported() {
        let mut ds = sine_dataset();
        ds.values.set2(0, 20, f64::INFINITY);
        let spec = crate::data::split::split(200, crate::data::split::DEFAULT_RATIOS).unwrap();
        let cfg = ModelConfig::small(12, 4, 0);
        let tcfg = TrainConfig { max_epochs: 2, patience: 1, batch_size: 512, ..TrainConfig::default() };
        assert!(matches!(
            train_loop(&cfg, Variant::Full, &tcfg, &ds, &spec),
            Err(Error::Divergence { epoch: 0, .. })
        ));
    }
}
