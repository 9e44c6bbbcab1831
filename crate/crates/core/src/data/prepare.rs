use crate::data::dataset::TimeSeriesDataset;
use crate::data::split::{fit_scaler, split, Scaler, SplitSpec, DEFAULT_RATIOS};
use crate::error::Result;

/// A benchmark dataset ready for training: calendar covariates appended,
/// split 7:1:2 and standardized with training-period statistics.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub dataset: TimeSeriesDataset,
    pub spec: SplitSpec,
    pub scaler: Scaler,
}

pub fn prepare_benchmark(raw: TimeSeriesDataset) -> Result<Prepared> {
    let spec = split(raw.len(), DEFAULT_RATIOS)?;
    let with_time = if raw.covariate_dim() == 0 { raw.with_time_features()? } else { raw };
    let scaler = fit_scaler(&with_time, &spec)?;
    let dataset = scaler.apply(&with_time)?;
    Ok(Prepared { dataset, spec, scaler })
}
