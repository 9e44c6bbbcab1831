use crate::data::dataset::TimeSeriesDataset;
use crate::data::events::EventLog;
use crate::data::split::{Segment, SplitSpec};
use crate::data::windows::{enumerate_windows, WindowPolicy};
use crate::error::Result;
use crate::eval::metrics::MetricsReport;
use crate::eval::rolling::{evaluate_windows_masked, rolling_evaluate, EVAL_BATCH};
use crate::eval::train::{train_loop, TrainConfig, TrainOutcome};
use crate::model::config::{ModelConfig, Variant};

#[derive(Clone, Debug)]
pub struct AblationArm {
    pub variant: Variant,
    pub outcome: TrainOutcome,
    pub test: MetricsReport,
}

/// The full model and one variant trained under the same configuration
/// and seed.
#[derive(Clone, Debug)]
pub struct AblationReport {
    pub full: AblationArm,
    pub ablated: AblationArm,
}

pub fn train_and_test(
    cfg: &ModelConfig,
    variant: Variant,
    tcfg: &TrainConfig,
    dataset: &TimeSeriesDataset,
    spec: &SplitSpec,
) -> Result<AblationArm> {
    let outcome = train_loop(cfg, variant, tcfg, dataset, spec)?;
    let test = rolling_evaluate(&outcome.model, dataset, spec, Segment::Test)?;
    Ok(AblationArm { variant, outcome, test })
}

pub fn ablate(
    variant: Variant,
    cfg: &ModelConfig,
    tcfg: &TrainConfig,
    dataset: &TimeSeriesDataset,
    spec: &SplitSpec,
) -> Result<AblationReport> {
    Ok(AblationReport {
        full: train_and_test(cfg, Variant::Full, tcfg, dataset, spec)?,
        ablated: train_and_test(cfg, variant, tcfg, dataset, spec)?,
    })
}

/// Test error of both arms restricted to steps inside or right after an
/// event on an affected series.
#[derive(Clone, Debug)]
pub struct EventAblation {
    pub full: MetricsReport,
    pub ablated: MetricsReport,
}

pub fn event_ablation(
    variant: Variant,
    cfg: &ModelConfig,
    tcfg: &TrainConfig,
    dataset: &TimeSeriesDataset,
    log: &EventLog,
    spec: &SplitSpec,
) -> Result<EventAblation> {
    let mask = log.adjacent_mask(dataset.len());
    let (start, end) = spec.bounds(Segment::Test);
    let windows = enumerate_windows(dataset.num_series(), start, end, cfg.lookback, cfg.horizon, WindowPolicy::ExtendIntoPrevious);
    let score = |v: Variant| -> Result<MetricsReport> {
        let outcome = train_loop(cfg, v, tcfg, dataset, spec)?;
        evaluate_windows_masked(&outcome.model, dataset, &windows, EVAL_BATCH, Some(&mask))
    };
    Ok(EventAblation { full: score(Variant::Full)?, ablated: score(variant)? })
}
