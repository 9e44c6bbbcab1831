//! Ingestion, splits, calendar covariates, windowing and event augmentation.

pub mod dataset;
pub mod events;
pub mod features;
pub mod prepare;
pub mod split;
pub mod synthetic;
pub mod windows;

pub use dataset::{load_csv, Frequency, TimeSeriesDataset};
pub use prepare::{prepare_benchmark, Prepared};
pub use split::{fit_scaler, split, Scaler, Segment, SplitSpec, DEFAULT_RATIOS};
pub use windows::{build_batch, enumerate_windows, make_batches, Window, WindowBatch, WindowPolicy};
