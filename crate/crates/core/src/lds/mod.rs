//! Linear dynamical systems: simulation, the exact one-step predictor, its
//! truncated autoregressive form, and the supervised dataset built from
//! several roll-outs.

pub mod dataset;
pub mod fit;
pub mod predictor;
pub mod system;
pub mod verify;

pub use dataset::{make_lds_dataset, LdsDataset};
pub use fit::{fit_linear, LinearFit};
pub use predictor::{ar_predict, ar_window, build_m_theta, decay_curve, lds_predictor, ArCoeffs};
pub use system::{rollout, sample_lds, LdsParams, Rollout};
pub use verify::{verify_decay, DecayReport};
