//! Finite-difference checks of every named block and of the whole network.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::windows::WindowBatch;
use crate::error::Result;
use crate::gradcheck::{finite_diff_gradcheck_with, GradCheckReport};
use crate::model::block::{BlockShape, ResidualBlock};
use crate::model::config::{ModelConfig, Variant};
use crate::model::tide::{TemporalHead, TiDEParams};
use crate::params::ParamStore;
use crate::tape::{BackwardFault, Mode};
use crate::tensor::Tensor;

pub const GRADCHECK_EPS: f64 = 1e-5;
pub const GRADCHECK_TOL: f64 = 1e-4;
/// Base points with a ReLU input closer than this to zero are redrawn.
pub const MIN_RELU_MARGIN: f64 = 1e-4;
const MAX_DRAWS: u64 = 16;

#[derive(Clone, Debug)]
pub struct NamedCheck {
    pub name: String,
    pub report: GradCheckReport,
}

impl NamedCheck {
    pub fn passed(&self) -> bool {
        self.report.max_rel_error < GRADCHECK_TOL
    }
}

/// Small network exercising every block kind: covariates, static
/// attributes, two encoder and decoder layers, layer norm and RevIN.
pub fn suite_config() -> ModelConfig {
    let mut c = ModelConfig::small(6, 3, 3);
    c.static_dim = 2;
    c.hidden_size = 8;
    c.num_encoder_layers = 2;
    c.num_decoder_layers = 2;
    c.decoder_output_dim = 3;
    c.temporal_decoder_hidden = 5;
    c.layer_norm = true;
    c.rev_in = true;
    c.num_series = 4;
    c
}

fn uniform(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).expect("sized")
}

fn random_batch(cfg: &ModelConfig, b: usize, rng: &mut ChaCha8Rng) -> WindowBatch {
    let (l, h) = (cfg.lookback, cfg.horizon);
    WindowBatch {
        lookback: uniform(rng, &[b, l]),
        target: uniform(rng, &[b, h]),
        covariates: uniform(rng, &[b, l + h, cfg.covariate_dim]),
        static_attrs: uniform(rng, &[b, cfg.static_dim]),
        series_index: (0..b).map(|i| i % cfg.num_series.max(1)).collect(),
        anchor: vec![cfg.lookback; b],
    }
}

/// Redraws the base point until no ReLU sits within the margin of its kink.
fn check_away_from_kinks(
    seed: u64,
    mut attempt: impl FnMut(&mut ChaCha8Rng) -> Result<GradCheckReport>,
) -> Result<GradCheckReport> {
    let mut last = None;
    for draw in 0..MAX_DRAWS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(draw));
        let r = attempt(&mut rng)?;
        if r.relu_margin > MIN_RELU_MARGIN {
            return Ok(r);
        }
        last = Some(r);
    }
    Ok(last.expect("at least one draw"))
}

fn block_check(name: &str, shape: BlockShape, rows: usize, seed: u64, fault: Option<BackwardFault>) -> Result<NamedCheck> {
    let report = check_away_from_kinks(seed, |rng| {
        let mut store = ParamStore::new();
        let block = ResidualBlock::init(&mut store, name, shape, rng)?;
        for id in block.param_ids() {
            let t = store.get(id).shape().to_vec();
            if t.len() == 1 {
                *store.get_mut(id) = uniform(rng, &t).scale(0.2);
            }
        }
        let mut params = store.tensors().to_vec();
        params.push(uniform(rng, &[rows, shape.input]));
        let weights = Tensor::new(
            vec![rows, shape.output],
            (0..rows * shape.output).map(|i| (1.3 * i as f64 + 0.4).sin()).collect(),
        )?;
        finite_diff_gradcheck_with(
            |t, v| {
                let (p, x) = v.split_at(v.len() - 1);
                let y = block.apply(t, p, x[0], 0.0, &mut Mode::Eval)?;
                let w = t.constant(weights.clone());
                let proj = t.mul(y, w)?;
                Ok(t.sum(proj))
            },
            &params,
            GRADCHECK_EPS,
            |t| t.set_fault(fault),
        )
    })?;
    Ok(NamedCheck { name: name.to_string(), report })
}

/// One check per named block of `cfg` under `variant`, followed by the
/// full network under the MSE loss.
pub fn gradient_suite(
    cfg: &ModelConfig,
    variant: Variant,
    seed: u64,
    fault: Option<BackwardFault>,
) -> Result<Vec<NamedCheck>> {
    let mut cfg = cfg.clone();
    cfg.dropout = 0.0;
    let model = TiDEParams::init(&cfg, variant, seed)?;
    let layout = model.layout();
    let mut out = Vec::new();
    let rows = 3;
    if let Some(fp) = &layout.feature_projection {
        out.push(block_check("feature_projection", fp.shape, rows, seed, fault)?);
    }
    for (i, b) in layout.encoder.iter().enumerate() {
        out.push(block_check(&format!("encoder.block{i}"), b.shape, rows, seed + 1 + i as u64, fault)?);
    }
    for (i, b) in layout.decoder.iter().enumerate() {
        out.push(block_check(&format!("decoder.block{i}"), b.shape, rows, seed + 101 + i as u64, fault)?);
    }
    if let Some(TemporalHead::Block(b)) = &layout.temporal {
        out.push(block_check("temporal_decoder", b.shape, rows, seed + 201, fault)?);
    }
    let report = check_away_from_kinks(seed + 301, |rng| {
        let mut m = model.clone();
        for t in m.store.tensors_mut() {
            if t.shape().len() == 1 {
                let perturb = uniform(rng, t.shape()).scale(0.1);
                *t = t.add(&perturb)?;
            }
        }
        let batch = random_batch(&cfg, 3, rng);
        finite_diff_gradcheck_with(
            |t, vars| {
                let y = m.forward_on_tape(t, vars, &batch, &mut Mode::Eval)?;
                let target = t.constant(batch.target.clone());
                t.mse_loss(y, target)
            },
            m.store.tensors(),
            GRADCHECK_EPS,
            |t| t.set_fault(fault),
        )
    })?;
    out.push(NamedCheck { name: "full_model".into(), report });
    Ok(out)
}
