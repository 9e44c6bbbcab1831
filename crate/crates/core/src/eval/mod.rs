//! Metrics, rolling evaluation, the training loop and ablations.

pub mod ablation;
pub mod metrics;
pub mod rolling;
pub mod train;

pub use ablation::{ablate, AblationArm, AblationReport};
pub use metrics::{mae, mse, MetricsReport};
pub use rolling::{evaluate_windows, rolling_evaluate, Forecaster, LeakedTarget};
pub use train::{train_loop, train_on_windows, EpochRecord, TrainConfig, TrainOutcome};
