//! Dense encoder-decoder forecasting on a self-contained reverse-mode tape,
//! with the data pipeline, evaluation protocol and a linear dynamical
//! system lab built around it.

pub mod bench;
pub mod data;
pub mod error;
pub mod eval;
pub mod gradcheck;
pub mod kv;
pub mod lds;
pub mod model;
pub mod optim;
pub mod params;
pub mod presets;
pub mod tape;
pub mod tensor;

pub use error::{Error, Result};
