//! The forecasting network: configuration, residual blocks, forward pass
//! and checkpoints.

pub mod block;
pub mod checkpoint;
pub mod config;
pub mod suite;
pub mod tide;

pub use block::{residual_block, BlockShape, ResidualBlock};
pub use config::{ModelConfig, Variant};
pub use tide::{revin_denormalize, revin_normalize, RevinStats, TiDEParams};
