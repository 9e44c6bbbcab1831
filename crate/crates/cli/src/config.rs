use std::path::PathBuf;

use tide::eval::train::TrainConfig;
use tide::kv;
use tide::model::config::{ModelConfig, Variant};
use tide::presets::{check_ranges, preset, PRESET_BATCH_SIZE};

use crate::error::CliError;

/// Keys filled in from the dataset; a file may state them only to assert
/// what the data will provide.
pub const DERIVED_KEYS: [&str; 3] = ["covariate_dim", "static_dim", "num_series"];

/// Everything a training run depends on.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub variant: Variant,
    pub preset: Option<String>,
    pub data: Option<PathBuf>,
    /// Keep only the first `n` series of the dataset.
    pub series_limit: Option<usize>,
    /// Derived keys stated explicitly, with their values.
    pub asserted: Vec<(String, usize)>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let mut model = ModelConfig::small(720, 96, 8);
        model.temporal_width = 4;
        model.hidden_size = 256;
        model.decoder_output_dim = 8;
        model.temporal_decoder_hidden = 64;
        model.layer_norm = true;
        RunConfig {
            model,
            train: TrainConfig::default(),
            variant: Variant::Full,
            preset: None,
            data: None,
            series_limit: None,
            asserted: Vec::new(),
        }
    }
}

impl RunConfig {
    /// Loads a preset row over the defaults, keeping the current horizon.
    pub fn apply_preset(&mut self, name: &str) -> Result<(), CliError> {
        let p = preset(name).map_err(|e| CliError::config("preset", e.to_string()))?;
        let horizon = self.model.horizon;
        self.model = p.model_config(horizon, self.model.covariate_dim, self.model.num_series);
        self.train.learning_rate = p.learning_rate;
        self.train.batch_size = PRESET_BATCH_SIZE;
        self.preset = Some(p.name.to_string());
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let bad = |e: tide::Error| CliError::config(key, e.to_string());
        if DERIVED_KEYS.contains(&key) {
            let v: usize = kv::parse_value(key, value).map_err(bad)?;
            self.asserted.retain(|(k, _)| k != key);
            self.asserted.push((key.to_string(), v));
            return Ok(());
        }
        match key {
            "preset" => return self.apply_preset(value),
            "variant" => self.variant = value.parse().map_err(bad)?,
            "data" => self.data = Some(PathBuf::from(value)),
            "series_limit" => self.series_limit = Some(kv::parse_value(key, value).map_err(bad)?),
            "max_epochs" => self.train.max_epochs = kv::parse_value(key, value).map_err(bad)?,
            "patience" => self.train.patience = kv::parse_value(key, value).map_err(bad)?,
            "batch_size" => self.train.batch_size = kv::parse_value(key, value).map_err(bad)?,
            "seed" => self.train.seed = kv::parse_value(key, value).map_err(bad)?,
            "learning_rate" => self.train.learning_rate = kv::parse_value(key, value).map_err(bad)?,
            _ => {
                if !self.model.set(key, value).map_err(bad)? {
                    return Err(CliError::config(key, format!("unknown configuration key `{key}`")));
                }
            }
        }
        Ok(())
    }

    /// Applies `key = value` text; a `preset` line is applied first so that
    /// the remaining lines override it.
    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        let pairs = kv::parse(text).map_err(|e| CliError::Config { key: None, message: e.to_string() })?;
        if let Some((_, p)) = pairs.iter().find(|(k, _)| k == "preset") {
            self.apply_preset(p)?;
        }
        for (k, v) in pairs.iter().filter(|(k, _)| k != "preset") {
            self.set(k, v)?;
        }
        Ok(())
    }

    /// Adopts the dataset's dimensions, rejecting contradicting assertions.
    pub fn bind_dataset(&mut self, covariate_dim: usize, static_dim: usize, num_series: usize) -> Result<(), CliError> {
        for (key, actual) in [("covariate_dim", covariate_dim), ("static_dim", static_dim), ("num_series", num_series)] {
            if let Some((_, stated)) = self.asserted.iter().find(|(k, _)| k == key) {
                if *stated != actual {
                    return Err(CliError::config(key, format!("`{key}` = {stated} but the dataset provides {actual}")));
                }
            }
        }
        self.model.covariate_dim = covariate_dim;
        self.model.static_dim = static_dim;
        self.model.num_series = num_series;
        if covariate_dim > 0 {
            self.model.temporal_width = self.model.temporal_width.min(covariate_dim);
        }
        Ok(())
    }

    /// Structural checks, plus the tuned ranges when a preset is in use.
    pub fn validate(&self) -> Result<(), CliError> {
        self.model.validate().map_err(invalid)?;
        self.train.validate().map_err(invalid)?;
        if self.preset.is_some() {
            check_ranges(&self.model, self.train.learning_rate).map_err(invalid)?;
        }
        Ok(())
    }

    /// Canonical text form; its hash identifies the run.
    pub fn to_kv(&self) -> Vec<(String, String)> {
        let mut pairs = self.model.to_kv();
        pairs.extend([
            ("variant".to_string(), self.variant.to_string()),
            ("max_epochs".to_string(), self.train.max_epochs.to_string()),
            ("patience".to_string(), self.train.patience.to_string()),
            ("batch_size".to_string(), self.train.batch_size.to_string()),
            ("seed".to_string(), self.train.seed.to_string()),
            ("learning_rate".to_string(), format!("{:?}", self.train.learning_rate)),
        ]);
        if let Some(p) = &self.preset {
            pairs.push(("preset".into(), p.clone()));
        }
        if let Some(d) = &self.data {
            pairs.push(("data".into(), d.display().to_string()));
        }
        if let Some(n) = self.series_limit {
            pairs.push(("series_limit".into(), n.to_string()));
        }
        pairs
    }
}

/// Attributes a validation error to the first backquoted key in its message.
fn invalid(e: tide::Error) -> CliError {
    let message = e.to_string();
    let key = message.find('`').and_then(|start| {
        let rest = &message[start + 1..];
        rest.find('`').map(|len| rest[..len].to_string())
    });
    CliError::Config { key, message }
}
