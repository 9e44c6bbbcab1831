//! Tuned hyperparameters for the seven long-horizon benchmarks.

use crate::error::{Error, Result};
use crate::model::config::ModelConfig;

pub const PRESET_LOOKBACK: usize = 720;
pub const PRESET_TEMPORAL_WIDTH: usize = 4;
pub const PRESET_BATCH_SIZE: usize = 512;
pub const HORIZONS: [usize; 4] = [96, 192, 336, 720];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub hidden_size: usize,
    pub num_encoder_layers: usize,
    pub num_decoder_layers: usize,
    pub decoder_output_dim: usize,
    pub temporal_decoder_hidden: usize,
    pub dropout: f64,
    pub layer_norm: bool,
    pub learning_rate: f64,
    pub rev_in: bool,
}

#[allow(clippy::too_many_arguments)]
const fn row(
    name: &'static str,
    hidden_size: usize,
    layers: (usize, usize),
    decoder_output_dim: usize,
    temporal_decoder_hidden: usize,
    dropout: f64,
    layer_norm: bool,
    learning_rate: f64,
    rev_in: bool,
) -> Preset {
    Preset {
        name,
        hidden_size,
        num_encoder_layers: layers.0,
        num_decoder_layers: layers.1,
        decoder_output_dim,
        temporal_decoder_hidden,
        dropout,
        layer_norm,
        learning_rate,
        rev_in,
    }
}

pub const PRESETS: [Preset; 7] = [
    row("traffic", 256, (1, 1), 16, 64, 0.3, false, 6.55e-5, true),
    row("electricity", 1024, (2, 2), 8, 64, 0.5, true, 9.99e-4, false),
    row("ettm1", 1024, (1, 1), 8, 128, 0.5, true, 8.39e-5, false),
    row("ettm2", 512, (2, 2), 16, 128, 0.0, true, 2.52e-4, true),
    row("etth1", 256, (2, 2), 8, 128, 0.3, true, 3.82e-5, true),
    row("etth2", 512, (2, 2), 32, 16, 0.2, true, 2.24e-4, true),
    row("weather", 512, (1, 1), 8, 16, 0.0, true, 3.01e-5, false),
];

/// Case-insensitive lookup.
pub fn preset(name: &str) -> Result<Preset> {
    PRESETS
        .iter()
        .find(|p| p.name.eq_ignore_ascii_case(name))
        .copied()
        .ok_or_else(|| {
            let known: Vec<_> = PRESETS.iter().map(|p| p.name).collect();
            Error::Config(format!("unknown preset `{name}`; known presets: {}", known.join(", ")))
        })
}

impl Preset {
    pub fn model_config(&self, horizon: usize, covariate_dim: usize, num_series: usize) -> ModelConfig {
        ModelConfig {
            lookback: PRESET_LOOKBACK,
            horizon,
            covariate_dim,
            temporal_width: PRESET_TEMPORAL_WIDTH.min(covariate_dim),
            static_dim: 0,
            hidden_size: self.hidden_size,
            num_encoder_layers: self.num_encoder_layers,
            num_decoder_layers: self.num_decoder_layers,
            decoder_output_dim: self.decoder_output_dim,
            temporal_decoder_hidden: self.temporal_decoder_hidden,
            dropout: self.dropout,
            layer_norm: self.layer_norm,
            rev_in: self.rev_in,
            num_series: num_series.max(1),
        }
    }
}

pub const HIDDEN_SIZES: [usize; 3] = [256, 512, 1024];
pub const LAYER_COUNTS: [usize; 3] = [1, 2, 3];
pub const DECODER_OUTPUT_DIMS: [usize; 4] = [4, 8, 16, 32];
/// Includes 16, which two of the shipped presets use.
pub const TEMPORAL_DECODER_HIDDEN: [usize; 4] = [16, 32, 64, 128];
pub const DROPOUTS: [f64; 5] = [0.0, 0.1, 0.2, 0.3, 0.5];
pub const LEARNING_RATE_RANGE: (f64, f64) = (1e-5, 1e-2);

/// Checks a tuned configuration against the search space. The error names
/// the first offending key.
pub fn check_ranges(cfg: &ModelConfig, learning_rate: f64) -> Result<()> {
    let out = |key: &str, v: String, allowed: String| {
        Err(Error::Config(format!("`{key}` = {v} is outside the tuned range {allowed}")))
    };
    let choices = |key: &str, v: usize, set: &[usize]| {
        if set.contains(&v) {
            Ok(())
        } else {
            out(key, v.to_string(), format!("{set:?}"))
        }
    };
    choices("hidden_size", cfg.hidden_size, &HIDDEN_SIZES)?;
    choices("num_encoder_layers", cfg.num_encoder_layers, &LAYER_COUNTS)?;
    choices("num_decoder_layers", cfg.num_decoder_layers, &LAYER_COUNTS)?;
    choices("decoder_output_dim", cfg.decoder_output_dim, &DECODER_OUTPUT_DIMS)?;
    choices("temporal_decoder_hidden", cfg.temporal_decoder_hidden, &TEMPORAL_DECODER_HIDDEN)?;
    if !DROPOUTS.iter().any(|&d| (d - cfg.dropout).abs() < 1e-12) {
        return out("dropout", cfg.dropout.to_string(), format!("{DROPOUTS:?}"));
    }
    let (lo, hi) = LEARNING_RATE_RANGE;
    if !(lo..=hi).contains(&learning_rate) {
        return out("learning_rate", learning_rate.to_string(), format!("[{lo}, {hi}]"));
    }
    if !HORIZONS.contains(&cfg.horizon) {
        return out("horizon", cfg.horizon.to_string(), format!("{HORIZONS:?}"));
    }
    Ok(())
}
