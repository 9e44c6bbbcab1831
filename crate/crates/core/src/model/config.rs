use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::kv;

/// Architecture switches used by the ablations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    Full,
    /// Per-step affine map of the decoded vector instead of the temporal decoder.
    NoTemporalDecoder,
    /// Every skip connection and the global residual removed.
    NoResiduals,
    /// Global residual only: an affine look-back → horizon map.
    LinearOnly,
}

impl Variant {
    pub fn has_skip(self) -> bool {
        !matches!(self, Variant::NoResiduals)
    }

    pub fn has_global_residual(self) -> bool {
        !matches!(self, Variant::NoResiduals)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::NoTemporalDecoder => "no_temporal_decoder",
            Variant::NoResiduals => "no_residuals",
            Variant::LinearOnly => "linear",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Variant::Full),
            "no_temporal_decoder" => Ok(Variant::NoTemporalDecoder),
            "no_residuals" => Ok(Variant::NoResiduals),
            "linear" => Ok(Variant::LinearOnly),
            other => Err(Error::Config(format!("unknown variant `{other}`"))),
        }
    }
}

/// Every architectural hyperparameter of the network.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    pub lookback: usize,
    pub horizon: usize,
    /// Dynamic covariate dimension `r`.
    pub covariate_dim: usize,
    /// Projected covariate dimension (`temporalWidth`).
    pub temporal_width: usize,
    pub static_dim: usize,
    pub hidden_size: usize,
    pub num_encoder_layers: usize,
    pub num_decoder_layers: usize,
    pub decoder_output_dim: usize,
    pub temporal_decoder_hidden: usize,
    pub dropout: f64,
    pub layer_norm: bool,
    pub rev_in: bool,
    /// Number of series; sizes the per-series RevIN affine parameters.
    pub num_series: usize,
}

pub const LAYER_NORM_EPS: f64 = 1e-6;
pub const REVIN_EPS: f64 = 1e-5;

impl ModelConfig {
    /// A small configuration for tests and examples.
    pub fn small(lookback: usize, horizon: usize, covariate_dim: usize) -> Self {
        ModelConfig {
            lookback,
            horizon,
            covariate_dim,
            temporal_width: covariate_dim.min(2),
            static_dim: 0,
            hidden_size: 16,
            num_encoder_layers: 1,
            num_decoder_layers: 1,
            decoder_output_dim: 4,
            temporal_decoder_hidden: 8,
            dropout: 0.0,
            layer_norm: false,
            rev_in: false,
            num_series: 1,
        }
    }

    /// Projected width actually used; zero when there are no covariates.
    pub fn projected_width(&self) -> usize {
        if self.covariate_dim == 0 {
            0
        } else {
            self.temporal_width
        }
    }

    pub fn feature_projection_hidden(&self) -> usize {
        self.covariate_dim.max(2 * self.temporal_width)
    }

    /// Width of the flattened encoder input.
    pub fn encoder_input_width(&self) -> usize {
        self.lookback + (self.lookback + self.horizon) * self.projected_width() + self.static_dim
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.lookback == 0 || self.horizon == 0 {
            return bad("lookback and horizon must be at least 1".into());
        }
        if self.covariate_dim > 0 && (self.temporal_width == 0 || self.temporal_width > self.covariate_dim) {
            return bad(format!(
                "temporal_width must be in 1..={} for {} covariates, got {}",
                self.covariate_dim, self.covariate_dim, self.temporal_width
            ));
        }
        for (name, v) in [
            ("hidden_size", self.hidden_size),
            ("num_encoder_layers", self.num_encoder_layers),
            ("num_decoder_layers", self.num_decoder_layers),
            ("decoder_output_dim", self.decoder_output_dim),
            ("temporal_decoder_hidden", self.temporal_decoder_hidden),
        ] {
            if v == 0 {
                return bad(format!("{name} must be at least 1"));
            }
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout must be in [0, 1), got {}", self.dropout));
        }
        if self.rev_in && self.num_series == 0 {
            return bad("rev_in needs num_series >= 1".into());
        }
        Ok(())
    }

    /// Closed-form parameter count for a variant.
    pub fn param_count(&self, variant: Variant) -> usize {
        let skip = variant.has_skip();
        let block = |inp: usize, hid: usize, out: usize| {
            let mut n = inp * hid + hid + hid * out + out;
            if skip {
                n += inp * out + out;
            }
            if self.layer_norm && out > 1 {
                n += 2 * out;
            }
            n
        };
        let (l, h, p) = (self.lookback, self.horizon, self.decoder_output_dim);
        let rt = self.projected_width();
        let revin = if self.rev_in { 2 * self.num_series } else { 0 };
        let global = l * h + h;
        if variant == Variant::LinearOnly {
            return global + revin;
        }
        let mut n = revin;
        if rt > 0 {
            n += block(self.covariate_dim, self.feature_projection_hidden(), rt);
        }
        let hs = self.hidden_size;
        for i in 0..self.num_encoder_layers {
            let inp = if i == 0 { self.encoder_input_width() } else { hs };
            n += block(inp, hs, hs);
        }
        for i in 0..self.num_decoder_layers {
            let out = if i + 1 == self.num_decoder_layers { p * h } else { hs };
            n += block(hs, hs, out);
        }
        n += match variant {
            Variant::NoTemporalDecoder => p + 1,
            _ => block(p + rt, self.temporal_decoder_hidden, 1),
        };
        if variant.has_global_residual() {
            n += global;
        }
        n
    }

    pub fn to_kv(&self) -> Vec<(String, String)> {
        let pairs: [(&str, String); 14] = [
            ("lookback", self.lookback.to_string()),
            ("horizon", self.horizon.to_string()),
            ("covariate_dim", self.covariate_dim.to_string()),
            ("temporal_width", self.temporal_width.to_string()),
            ("static_dim", self.static_dim.to_string()),
            ("hidden_size", self.hidden_size.to_string()),
            ("num_encoder_layers", self.num_encoder_layers.to_string()),
            ("num_decoder_layers", self.num_decoder_layers.to_string()),
            ("decoder_output_dim", self.decoder_output_dim.to_string()),
            ("temporal_decoder_hidden", self.temporal_decoder_hidden.to_string()),
            ("dropout", format!("{:?}", self.dropout)),
            ("layer_norm", self.layer_norm.to_string()),
            ("rev_in", self.rev_in.to_string()),
            ("num_series", self.num_series.to_string()),
        ];
        pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    /// Applies one `key = value` setting. Returns `false` for keys that do
    /// not belong to the model.
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool> {
        match key {
            "lookback" => self.lookback = kv::parse_value(key, value)?,
            "horizon" => self.horizon = kv::parse_value(key, value)?,
            "covariate_dim" => self.covariate_dim = kv::parse_value(key, value)?,
            "temporal_width" => self.temporal_width = kv::parse_value(key, value)?,
            "static_dim" => self.static_dim = kv::parse_value(key, value)?,
            "hidden_size" => self.hidden_size = kv::parse_value(key, value)?,
            "num_encoder_layers" => self.num_encoder_layers = kv::parse_value(key, value)?,
            "num_decoder_layers" => self.num_decoder_layers = kv::parse_value(key, value)?,
            "decoder_output_dim" => self.decoder_output_dim = kv::parse_value(key, value)?,
            "temporal_decoder_hidden" => self.temporal_decoder_hidden = kv::parse_value(key, value)?,
            "dropout" => self.dropout = kv::parse_value(key, value)?,
            "layer_norm" => self.layer_norm = kv::parse_bool(key, value)?,
            "rev_in" => self.rev_in = kv::parse_bool(key, value)?,
            "num_series" => self.num_series = kv::parse_value(key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    pub fn from_kv(pairs: &[(String, String)]) -> Result<Self> {
        let mut cfg = ModelConfig::small(1, 1, 0);
        let mut seen = Vec::new();
        for (k, v) in pairs {
            if !cfg.set(k, v)? {
                return Err(Error::Config(format!("unknown model key `{k}`")));
            }
            seen.push(k.as_str());
        }
        for (k, _) in cfg.to_kv() {
            if !seen.contains(&k.as_str()) {
                return Err(Error::Config(format!("missing model key `{k}`")));
            }
        }
        Ok(cfg)
    }
}
