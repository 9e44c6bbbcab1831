use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::config::LAYER_NORM_EPS;
use crate::params::{glorot_uniform, ParamId, ParamStore};
use crate::tape::{Mode, Tape, Var};
use crate::tensor::Tensor;

/// Widths and switches of one residual block.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockShape {
    pub input: usize,
    pub hidden: usize,
    pub output: usize,
    pub skip: bool,
    pub layer_norm: bool,
}

impl BlockShape {
    /// Layer norm is applied only to outputs of width two or more.
    pub fn uses_layer_norm(&self) -> bool {
        self.layer_norm && self.output > 1
    }
}

/// Parameter handles of a residual block inside a [`ParamStore`].
///
/// Forward: `LN(dropout(relu(x·W1 + b1)·W2 + b2) + x·W_skip + b_skip)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualBlock {
    pub shape: BlockShape,
    pub w1: ParamId,
    pub b1: ParamId,
    pub w2: ParamId,
    pub b2: ParamId,
    pub skip: Option<(ParamId, ParamId)>,
    pub ln: Option<(ParamId, ParamId)>,
}

impl ResidualBlock {
    /// Registers `<prefix>.W1`, `.b1`, `.W2`, `.b2`, `.W_skip`, `.b_skip`,
    /// `.ln_gain`, `.ln_bias` (the last four only when enabled).
    pub fn init(store: &mut ParamStore, prefix: &str, shape: BlockShape, rng: &mut ChaCha8Rng) -> Result<Self> {
        let BlockShape { input, hidden, output, .. } = shape;
        let w1 = store.insert(format!("{prefix}.W1"), glorot_uniform(input, hidden, rng))?;
        let b1 = store.insert(format!("{prefix}.b1"), Tensor::zeros(&[hidden]))?;
        let w2 = store.insert(format!("{prefix}.W2"), glorot_uniform(hidden, output, rng))?;
        let b2 = store.insert(format!("{prefix}.b2"), Tensor::zeros(&[output]))?;
        let skip = if shape.skip {
            Some((
                store.insert(format!("{prefix}.W_skip"), glorot_uniform(input, output, rng))?,
                store.insert(format!("{prefix}.b_skip"), Tensor::zeros(&[output]))?,
            ))
        } else {
            None
        };
        let ln = if shape.uses_layer_norm() {
            Some((
                store.insert(format!("{prefix}.ln_gain"), Tensor::full(&[output], 1.0))?,
                store.insert(format!("{prefix}.ln_bias"), Tensor::zeros(&[output]))?,
            ))
        } else {
            None
        };
        Ok(ResidualBlock { shape, w1, b1, w2, b2, skip, ln })
    }

    /// Rebinds a block to an existing store by name.
    pub fn bind(store: &ParamStore, prefix: &str, shape: BlockShape) -> Result<Self> {
        let id = |suffix: &str, dims: &[usize]| -> Result<ParamId> {
            let name = format!("{prefix}.{suffix}");
            let id = store
                .id(&name)
                .ok_or_else(|| Error::Checkpoint(format!("missing parameter {name}")))?;
            if store.get(id).shape() != dims {
                return Err(Error::Checkpoint(format!(
                    "{name}: expected shape {dims:?}, found {:?}",
                    store.get(id).shape()
                )));
            }
            Ok(id)
        };
        let BlockShape { input, hidden, output, .. } = shape;
        Ok(ResidualBlock {
            shape,
            w1: id("W1", &[input, hidden])?,
            b1: id("b1", &[hidden])?,
            w2: id("W2", &[hidden, output])?,
            b2: id("b2", &[output])?,
            skip: if shape.skip {
                Some((id("W_skip", &[input, output])?, id("b_skip", &[output])?))
            } else {
                None
            },
            ln: if shape.uses_layer_norm() {
                Some((id("ln_gain", &[output])?, id("ln_bias", &[output])?))
            } else {
                None
            },
        })
    }

    /// Applies the block to `x: [batch, input]`; `vars` maps parameter ids
    /// to tape nodes.
    pub fn apply(&self, tape: &mut Tape, vars: &[Var], x: Var, dropout: f64, mode: &mut Mode<'_>) -> Result<Var> {
        let width = tape.value(x).shape().get(1).copied();
        if tape.value(x).shape().len() != 2 || width != Some(self.shape.input) {
            return Err(Error::dim("residual_block", &[self.shape.input], tape.value(x).shape()));
        }
        let v = |id: ParamId| vars[id.index()];
        let h = tape.affine(x, v(self.w1), v(self.b1))?;
        let h = tape.relu(h);
        let out = tape.affine(h, v(self.w2), v(self.b2))?;
        let mut out = tape.dropout(out, dropout, mode)?;
        if let Some((ws, bs)) = self.skip {
            let s = tape.affine(x, v(ws), v(bs))?;
            out = tape.add(out, s)?;
        }
        if let Some((g, b)) = self.ln {
            out = tape.layer_norm(out, v(g), v(b), LAYER_NORM_EPS)?;
        }
        Ok(out)
    }

    pub fn param_ids(&self) -> Vec<ParamId> {
        let mut ids = vec![self.w1, self.b1, self.w2, self.b2];
        ids.extend(self.skip.iter().flat_map(|&(w, b)| [w, b]));
        ids.extend(self.ln.iter().flat_map(|&(g, b)| [g, b]));
        ids
    }
}

/// Evaluates one block on concrete tensors.
pub fn residual_block(
    x: &Tensor,
    store: &ParamStore,
    block: &ResidualBlock,
    dropout: f64,
    mode: &mut Mode<'_>,
) -> Result<Tensor> {
    let mut tape = Tape::new();
    let vars: Vec<Var> = store.tensors().iter().map(|t| tape.constant(t.clone())).collect();
    let xv = tape.constant(x.clone());
    let y = block.apply(&mut tape, &vars, xv, dropout, mode)?;
    Ok(tape.value(y).clone())
}
