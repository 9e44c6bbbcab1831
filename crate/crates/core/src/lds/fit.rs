use crate::data::split::{fit_scaler, Segment};
use crate::error::Result;
use crate::eval::metrics::MetricsReport;
use crate::eval::rolling::{evaluate_windows, EVAL_BATCH};
use crate::eval::train::{train_on_windows, TrainConfig, TrainOutcome};
use crate::lds::dataset::{make_lds_dataset, INPUT_DIM, LOOKBACK, NUM_SERIES, HORIZON};
use crate::model::config::{ModelConfig, Variant};

#[derive(Clone, Debug)]
pub struct LinearFit {
    pub outcome: TrainOutcome,
    /// Test error in units standardized by the training period.
    pub test: MetricsReport,
}

/// Configuration of the look-back → horizon linear map on the LDS data.
pub fn linear_config() -> ModelConfig {
    let mut c = ModelConfig::small(LOOKBACK, HORIZON, INPUT_DIM);
    c.num_series = NUM_SERIES;
    c
}

/// Trains the pure linear model on the LDS dataset built from `seed`.
pub fn fit_linear(seed: u64, tcfg: &TrainConfig) -> Result<LinearFit> {
    let lds = make_lds_dataset(seed)?;
    let scaled = fit_scaler(&lds.dataset, &lds.split)?.apply(&lds.dataset)?;
    let cfg = linear_config();
    let outcome = train_on_windows(
        &cfg,
        Variant::LinearOnly,
        tcfg,
        &scaled,
        lds.windows(Segment::Train),
        lds.windows(Segment::Val),
        |_| {},
    )?;
    let test = evaluate_windows(&outcome.model, &scaled, lds.windows(Segment::Test), EVAL_BATCH)?;
    Ok(LinearFit { outcome, test })
}
