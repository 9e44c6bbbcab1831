//! Tensor-level reverse-mode automatic differentiation.
//!
//! Every primitive appends a node holding its output value plus whatever
//! it needs for the backward pass. Nodes are only ever appended, so the
//! node order is a topological order and [`Tape::backward`] is a single
//! reverse sweep.
//!
//! ```
//! use tide::tape::Tape;
//! use tide::tensor::Tensor;
//!
//! let mut tape = Tape::new();
//! let w = tape.leaf(Tensor::scalar(3.0));
//! let sq = tape.mul(w, w).unwrap();
//! let grads = tape.backward(sq).unwrap();
//! assert_eq!(grads.get(w).unwrap().item(), 6.0);
//! ```

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tensor::{gemm, Tensor};

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Whether stochastic layers are active.
pub enum Mode<'a> {
    Eval,
    Train(&'a mut ChaCha8Rng),
}

impl Mode<'_> {
    pub fn is_train(&self) -> bool {
        matches!(self, Mode::Train(_))
    }
}

/// Deliberate corruption of a backward rule, used as a negative control
/// for the gradient checker.
#[doc(hidden)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BackwardFault {
    ReluSlope(f64),
}

enum Op {
    Leaf,
    Affine { x: Var, w: Var, b: Var },
    Relu { x: Var },
    LayerNorm { x: Var, gain: Var, bias: Var, xhat: Vec<f64>, inv_std: Vec<f64> },
    Dropout { x: Var, mask: Vec<f64> },
    Add { a: Var, b: Var },
    Mul { a: Var, b: Var },
    Scale { x: Var, s: f64 },
    Sum { x: Var },
    ConcatCols { parts: Vec<Var> },
    SliceCols { x: Var, start: usize },
    Reshape { x: Var },
    RowAffine { x: Var, mul: Vec<f64> },
    GatherScaleShift { x: Var, gain: Var, bias: Var, idx: Vec<usize> },
    GatherUnscaleShift { x: Var, gain: Var, bias: Var, idx: Vec<usize>, eps: f64 },
    Mse { pred: Var, target: Var },
}

struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
    fault: Option<BackwardFault>,
}

/// Gradients produced by one backward sweep, indexed by node.
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    /// Gradient of `v`, or zeros shaped like `like` when `v` did not
    /// influence the loss.
    pub fn take_or_zeros(&mut self, v: Var, like: &[usize]) -> Tensor {
        self.grads
            .get_mut(v.0)
            .and_then(Option::take)
            .unwrap_or_else(|| Tensor::zeros(like))
    }
}

fn accumulate(grads: &mut [Option<Tensor>], v: Var, g: Tensor) {
    match &mut grads[v.0] {
        Some(existing) => {
            for (a, b) in existing.data_mut().iter_mut().zip(g.data()) {
                *a += b;
            }
        }
        slot @ None => *slot = Some(g),
    }
}

fn check_matrix(op: &'static str, t: &Tensor) -> Result<(usize, usize)> {
    if t.shape().len() != 2 {
        return Err(Error::Contract(format!(
            "{op} expects a matrix, got shape {:?}",
            t.shape()
        )));
    }
    Ok((t.shape()[0], t.shape()[1]))
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    #[doc(hidden)]
    pub fn set_fault(&mut self, fault: Option<BackwardFault>) {
        self.fault = fault;
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    fn push(&mut self, value: Tensor, op: Op, inputs: &[Var]) -> Var {
        let requires_grad = inputs.iter().any(|v| self.nodes[v.0].requires_grad);
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    /// A differentiable leaf (typically a parameter).
    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
            requires_grad: true,
        });
        Var(self.nodes.len() - 1)
    }

    /// A leaf that never receives a gradient (input data).
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
            requires_grad: false,
        });
        Var(self.nodes.len() - 1)
    }

    /// Smallest |pre-activation| seen by any ReLU on this tape, or
    /// `f64::INFINITY` when there is none.
    pub fn min_relu_margin(&self) -> f64 {
        self.nodes
            .iter()
            .filter_map(|n| match n.op {
                Op::Relu { x } => Some(self.nodes[x.0].value.data().iter().fold(f64::INFINITY, |m, v| m.min(v.abs()))),
                _ => None,
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// `y = x·W + b` for `x: [batch, in]`, `W: [in, out]`, `b: [out]`.
    pub fn affine(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let xv = &self.nodes[x.0].value;
        let wv = &self.nodes[w.0].value;
        let bv = &self.nodes[b.0].value;
        let (batch, inp) = check_matrix("affine", xv)?;
        let (w_in, out) = check_matrix("affine", wv)?;
        if inp != w_in {
            return Err(Error::dim("affine", xv.shape(), wv.shape()));
        }
        if bv.shape() != [out] {
            return Err(Error::dim("affine bias", wv.shape(), bv.shape()));
        }
        let mut y = Vec::with_capacity(batch * out);
        for _ in 0..batch {
            y.extend_from_slice(bv.data());
        }
        gemm(batch, inp, out, xv.data(), false, wv.data(), false, &mut y, true);
        let value = Tensor::new(vec![batch, out], y)?;
        Ok(self.push(value, Op::Affine { x, w, b }, &[x, w, b]))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let value = self.nodes[x.0].value.map(|v| v.max(0.0));
        self.push(value, Op::Relu { x }, &[x])
    }

    /// Row-wise layer normalisation with population variance.
    pub fn layer_norm(&mut self, x: Var, gain: Var, bias: Var, eps: f64) -> Result<Var> {
        if eps <= 0.0 {
            return Err(Error::Parameter(format!("layer norm eps must be positive, got {eps}")));
        }
        let xv = &self.nodes[x.0].value;
        let (rows, d) = check_matrix("layer_norm", xv)?;
        let gv = self.nodes[gain.0].value.data();
        let bv = self.nodes[bias.0].value.data();
        if d == 0 || gv.len() != d || bv.len() != d {
            return Err(Error::dim("layer_norm", xv.shape(), &[gv.len()]));
        }
        let mut xhat = vec![0.0; rows * d];
        let mut inv_std = vec![0.0; rows];
        let mut y = vec![0.0; rows * d];
        for r in 0..rows {
            let row = xv.row(r);
            let mean = row.iter().sum::<f64>() / d as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
            let inv = 1.0 / (var + eps).sqrt();
            inv_std[r] = inv;
            for c in 0..d {
                let h = (row[c] - mean) * inv;
                xhat[r * d + c] = h;
                y[r * d + c] = gv[c] * h + bv[c];
            }
        }
        let value = Tensor::new(vec![rows, d], y)?;
        Ok(self.push(
            value,
            Op::LayerNorm { x, gain, bias, xhat, inv_std },
            &[x, gain, bias],
        ))
    }

    /// Inverted dropout. Identity in eval mode or when `p == 0`.
    pub fn dropout(&mut self, x: Var, p: f64, mode: &mut Mode<'_>) -> Result<Var> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::Parameter(format!("dropout probability must be in [0, 1), got {p}")));
        }
        let rng = match mode {
            Mode::Train(rng) if p > 0.0 => rng,
            _ => return Ok(x),
        };
        let keep = 1.0 / (1.0 - p);
        let xv = &self.nodes[x.0].value;
        let mask: Vec<f64> = (0..xv.len())
            .map(|_| if rng.random::<f64>() < p { 0.0 } else { keep })
            .collect();
        let data = xv.data().iter().zip(&mask).map(|(a, m)| a * m).collect();
        let value = Tensor::new(xv.shape().to_vec(), data)?;
        Ok(self.push(value, Op::Dropout { x, mask }, &[x]))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.nodes[a.0].value.add(&self.nodes[b.0].value)?;
        Ok(self.push(value, Op::Add { a, b }, &[a, b]))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.nodes[a.0]
            .value
            .zip_map(&self.nodes[b.0].value, "mul", |x, y| x * y)?;
        Ok(self.push(value, Op::Mul { a, b }, &[a, b]))
    }

    pub fn scale(&mut self, x: Var, s: f64) -> Var {
        let value = self.nodes[x.0].value.scale(s);
        self.push(value, Op::Scale { x, s }, &[x])
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let value = Tensor::scalar(self.nodes[x.0].value.sum());
        self.push(value, Op::Sum { x }, &[x])
    }

    /// Concatenates matrices with equal row counts along columns.
    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Contract("concat_cols needs at least one part".into()))?;
        let rows = check_matrix("concat_cols", &self.nodes[first.0].value)?.0;
        let mut total = 0;
        for p in parts {
            let (r, c) = check_matrix("concat_cols", &self.nodes[p.0].value)?;
            if r != rows {
                return Err(Error::dim(
                    "concat_cols",
                    self.nodes[first.0].value.shape(),
                    self.nodes[p.0].value.shape(),
                ));
            }
            total += c;
        }
        let mut out = Vec::with_capacity(rows * total);
        for r in 0..rows {
            for p in parts {
                out.extend_from_slice(self.nodes[p.0].value.row(r));
            }
        }
        let value = Tensor::new(vec![rows, total], out)?;
        Ok(self.push(value, Op::ConcatCols { parts: parts.to_vec() }, parts))
    }

    pub fn slice_cols(&mut self, x: Var, start: usize, end: usize) -> Result<Var> {
        let value = self.nodes[x.0].value.slice_cols(start, end)?;
        Ok(self.push(value, Op::SliceCols { x, start }, &[x]))
    }

    /// Reinterprets the row-major buffer under a new shape.
    pub fn reshape(&mut self, x: Var, shape: &[usize]) -> Result<Var> {
        let value = self.nodes[x.0].value.clone().reshape(shape)?;
        Ok(self.push(value, Op::Reshape { x }, &[x]))
    }

    /// `y[r, :] = x[r, :]·mul[r] + add[r]` with constant per-row factors.
    pub fn row_affine(&mut self, x: Var, mul: &[f64], add: &[f64]) -> Result<Var> {
        let xv = &self.nodes[x.0].value;
        let (rows, cols) = check_matrix("row_affine", xv)?;
        if mul.len() != rows || add.len() != rows {
            return Err(Error::dim("row_affine", xv.shape(), &[mul.len()]));
        }
        let mut out = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            out.extend(xv.row(r).iter().map(|v| v * mul[r] + add[r]));
        }
        let value = Tensor::new(vec![rows, cols], out)?;
        Ok(self.push(value, Op::RowAffine { x, mul: mul.to_vec() }, &[x]))
    }

    fn check_gather(&self, op: &'static str, x: Var, gain: Var, bias: Var, idx: &[usize]) -> Result<usize> {
        let (rows, cols) = check_matrix(op, &self.nodes[x.0].value)?;
        let n = self.nodes[gain.0].value.len();
        if self.nodes[bias.0].value.len() != n || idx.len() != rows {
            return Err(Error::dim(op, &[rows, cols], &[n, idx.len()]));
        }
        if let Some(bad) = idx.iter().find(|&&i| i >= n) {
            return Err(Error::Contract(format!("{op}: index {bad} out of range for {n} entries")));
        }
        Ok(cols)
    }

    /// `y[r, :] = x[r, :]·gain[idx[r]] + bias[idx[r]]`.
    pub fn gather_scale_shift(&mut self, x: Var, gain: Var, bias: Var, idx: &[usize]) -> Result<Var> {
        let cols = self.check_gather("gather_scale_shift", x, gain, bias, idx)?;
        let xv = &self.nodes[x.0].value;
        let g = self.nodes[gain.0].value.data();
        let b = self.nodes[bias.0].value.data();
        let mut out = Vec::with_capacity(xv.len());
        for (r, &i) in idx.iter().enumerate() {
            out.extend(xv.row(r).iter().map(|v| v * g[i] + b[i]));
        }
        let value = Tensor::new(vec![idx.len(), cols], out)?;
        Ok(self.push(
            value,
            Op::GatherScaleShift { x, gain, bias, idx: idx.to_vec() },
            &[x, gain, bias],
        ))
    }

    /// Inverse of [`Tape::gather_scale_shift`]: `(x − bias)/(gain + eps)`.
    pub fn gather_unscale_shift(&mut self, x: Var, gain: Var, bias: Var, idx: &[usize], eps: f64) -> Result<Var> {
        let cols = self.check_gather("gather_unscale_shift", x, gain, bias, idx)?;
        let xv = &self.nodes[x.0].value;
        let g = self.nodes[gain.0].value.data();
        let b = self.nodes[bias.0].value.data();
        let mut out = Vec::with_capacity(xv.len());
        for (r, &i) in idx.iter().enumerate() {
            out.extend(xv.row(r).iter().map(|v| (v - b[i]) / (g[i] + eps)));
        }
        let value = Tensor::new(vec![idx.len(), cols], out)?;
        Ok(self.push(
            value,
            Op::GatherUnscaleShift { x, gain, bias, idx: idx.to_vec(), eps },
            &[x, gain, bias],
        ))
    }

    /// Mean squared error over every entry.
    pub fn mse_loss(&mut self, pred: Var, target: Var) -> Result<Var> {
        let p = &self.nodes[pred.0].value;
        let t = &self.nodes[target.0].value;
        if p.shape() != t.shape() {
            return Err(Error::dim("mse_loss", p.shape(), t.shape()));
        }
        if p.is_empty() {
            return Err(Error::Contract("mse_loss of an empty tensor".into()));
        }
        let s: f64 = p.data().iter().zip(t.data()).map(|(a, b)| (a - b) * (a - b)).sum();
        let value = Tensor::scalar(s / p.len() as f64);
        Ok(self.push(value, Op::Mse { pred, target }, &[pred, target]))
    }

    /// Reverse sweep from a scalar node.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let lv = &self.nodes[loss.0].value;
        if !lv.is_scalar() {
            return Err(Error::Contract(format!(
                "backward needs a scalar loss, got shape {:?}",
                lv.shape()
            )));
        }
        let mut grads: Vec<Option<Tensor>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::full(lv.shape(), 1.0));

        for i in (0..=loss.0).rev() {
            let node = &self.nodes[i];
            if !node.requires_grad {
                continue;
            }
            let Some(gy) = grads[i].take() else { continue };
            self.backward_node(node, &gy, &mut grads);
            grads[i] = Some(gy);
        }
        Ok(Gradients { grads })
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn backward_node(&self, node: &Node, gy: &Tensor, grads: &mut [Option<Tensor>]) {
        let val = |v: Var| &self.nodes[v.0].value;
        match &node.op {
            Op::Leaf => {}
            Op::Affine { x, w, b } => {
                let (xv, wv) = (val(*x), val(*w));
                let (batch, inp) = (xv.rows(), xv.cols());
                let out = wv.cols();
                if self.needs(*x) {
                    let mut gx = vec![0.0; batch * inp];
                    gemm(batch, out, inp, gy.data(), false, wv.data(), true, &mut gx, false);
                    accumulate(grads, *x, Tensor::new(vec![batch, inp], gx).unwrap());
                }
                if self.needs(*w) {
                    let mut gw = vec![0.0; inp * out];
                    gemm(inp, batch, out, xv.data(), true, gy.data(), false, &mut gw, false);
                    accumulate(grads, *w, Tensor::new(vec![inp, out], gw).unwrap());
                }
                if self.needs(*b) {
                    let mut gb = vec![0.0; out];
                    for r in 0..batch {
                        for (acc, g) in gb.iter_mut().zip(gy.row(r)) {
                            *acc += g;
                        }
                    }
                    accumulate(grads, *b, Tensor::vector(gb));
                }
            }
            Op::Relu { x } => {
                let slope = match self.fault {
                    Some(BackwardFault::ReluSlope(s)) => s,
                    None => 1.0,
                };
                let g = val(*x)
                    .zip_map(gy, "relu", |xv, g| if xv > 0.0 { g * slope } else { 0.0 })
                    .unwrap();
                accumulate(grads, *x, g);
            }
            Op::LayerNorm { x, gain, bias, xhat, inv_std } => {
                let gv = val(*gain).data();
                let (rows, d) = (gy.rows(), gy.cols());
                if self.needs(*x) {
                    let mut gx = vec![0.0; rows * d];
                    for r in 0..rows {
                        let gr = gy.row(r);
                        let hr = &xhat[r * d..(r + 1) * d];
                        let mut sum_dh = 0.0;
                        let mut sum_dh_h = 0.0;
                        for c in 0..d {
                            let dh = gr[c] * gv[c];
                            sum_dh += dh;
                            sum_dh_h += dh * hr[c];
                        }
                        let k = inv_std[r] / d as f64;
                        for c in 0..d {
                            let dh = gr[c] * gv[c];
                            gx[r * d + c] = k * (d as f64 * dh - sum_dh - hr[c] * sum_dh_h);
                        }
                    }
                    accumulate(grads, *x, Tensor::new(vec![rows, d], gx).unwrap());
                }
                if self.needs(*gain) || self.needs(*bias) {
                    let mut gg = vec![0.0; d];
                    let mut gb = vec![0.0; d];
                    for r in 0..rows {
                        for c in 0..d {
                            let g = gy.data()[r * d + c];
                            gg[c] += g * xhat[r * d + c];
                            gb[c] += g;
                        }
                    }
                    if self.needs(*gain) {
                        accumulate(grads, *gain, Tensor::vector(gg));
                    }
                    if self.needs(*bias) {
                        accumulate(grads, *bias, Tensor::vector(gb));
                    }
                }
            }
            Op::Dropout { x, mask } => {
                let data = gy.data().iter().zip(mask).map(|(g, m)| g * m).collect();
                accumulate(grads, *x, Tensor::new(gy.shape().to_vec(), data).unwrap());
            }
            Op::Add { a, b } => {
                if self.needs(*a) {
                    accumulate(grads, *a, gy.clone());
                }
                if self.needs(*b) {
                    accumulate(grads, *b, gy.clone());
                }
            }
            Op::Mul { a, b } => {
                if self.needs(*a) {
                    accumulate(grads, *a, gy.zip_map(val(*b), "mul", |g, y| g * y).unwrap());
                }
                if self.needs(*b) {
                    accumulate(grads, *b, gy.zip_map(val(*a), "mul", |g, x| g * x).unwrap());
                }
            }
            Op::Scale { x, s } => accumulate(grads, *x, gy.scale(*s)),
            Op::Sum { x } => {
                let xv = val(*x);
                accumulate(grads, *x, Tensor::full(xv.shape(), gy.item()));
            }
            Op::ConcatCols { parts } => {
                let rows = gy.rows();
                let mut offset = 0;
                for p in parts {
                    let w = val(*p).cols();
                    if self.needs(*p) {
                        let mut g = Vec::with_capacity(rows * w);
                        for r in 0..rows {
                            g.extend_from_slice(&gy.row(r)[offset..offset + w]);
                        }
                        accumulate(grads, *p, Tensor::new(vec![rows, w], g).unwrap());
                    }
                    offset += w;
                }
            }
            Op::SliceCols { x, start } => {
                let xv = val(*x);
                let (rows, cols) = (xv.rows(), xv.cols());
                let w = gy.cols();
                let mut g = vec![0.0; rows * cols];
                for r in 0..rows {
                    g[r * cols + start..r * cols + start + w].copy_from_slice(gy.row(r));
                }
                accumulate(grads, *x, Tensor::new(vec![rows, cols], g).unwrap());
            }
            Op::Reshape { x } => {
                let g = gy.clone().reshape(val(*x).shape()).unwrap();
                accumulate(grads, *x, g);
            }
            Op::RowAffine { x, mul } => {
                let cols = gy.cols();
                let mut g = gy.clone();
                for (r, m) in mul.iter().enumerate() {
                    for v in &mut g.data_mut()[r * cols..(r + 1) * cols] {
                        *v *= m;
                    }
                }
                accumulate(grads, *x, g);
            }
            Op::GatherScaleShift { x, gain, bias, idx } => {
                let (xv, gv) = (val(*x), val(*gain).data());
                let n = gv.len();
                let mut gx = gy.clone();
                let mut gg = vec![0.0; n];
                let mut gb = vec![0.0; n];
                for (r, &i) in idx.iter().enumerate() {
                    let grow = gy.row(r);
                    gg[i] += grow.iter().zip(xv.row(r)).map(|(g, x)| g * x).sum::<f64>();
                    gb[i] += grow.iter().sum::<f64>();
                    for v in gx.row_mut(r) {
                        *v *= gv[i];
                    }
                }
                if self.needs(*x) {
                    accumulate(grads, *x, gx);
                }
                if self.needs(*gain) {
                    accumulate(grads, *gain, Tensor::new(val(*gain).shape().to_vec(), gg).unwrap());
                }
                if self.needs(*bias) {
                    accumulate(grads, *bias, Tensor::new(val(*bias).shape().to_vec(), gb).unwrap());
                }
            }
            Op::GatherUnscaleShift { x, gain, bias, idx, eps } => {
                let xv = val(*x);
                let (gv, bv) = (val(*gain).data(), val(*bias).data());
                let n = gv.len();
                let mut gx = gy.clone();
                let mut gg = vec![0.0; n];
                let mut gb = vec![0.0; n];
                for (r, &i) in idx.iter().enumerate() {
                    let denom = gv[i] + eps;
                    let grow = gy.row(r);
                    gb[i] -= grow.iter().sum::<f64>() / denom;
                    gg[i] -= grow
                        .iter()
                        .zip(xv.row(r))
                        .map(|(g, x)| g * (x - bv[i]))
                        .sum::<f64>()
                        / (denom * denom);
                    for v in gx.row_mut(r) {
                        *v /= denom;
                    }
                }
                if self.needs(*x) {
                    accumulate(grads, *x, gx);
                }
                if self.needs(*gain) {
                    accumulate(grads, *gain, Tensor::new(val(*gain).shape().to_vec(), gg).unwrap());
                }
                if self.needs(*bias) {
                    accumulate(grads, *bias, Tensor::new(val(*bias).shape().to_vec(), gb).unwrap());
                }
            }
            Op::Mse { pred, target } => {
                let (p, t) = (val(*pred), val(*target));
                let k = 2.0 * gy.item() / p.len() as f64;
                let diff = p.zip_map(t, "mse", |a, b| (a - b) * k).unwrap();
                if self.needs(*target) {
                    accumulate(grads, *target, diff.scale(-1.0));
                }
                if self.needs(*pred) {
                    accumulate(grads, *pred, diff);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;

    use super::*;

    fn mat(rows: usize, cols: usize, data: &[f64]) -> Tensor {
        Tensor::new(vec![rows, cols], data.to_vec()).unwrap()
    }

    #[test]
    fn affine_identity_zero_and_diagonal() {
        let mut t = Tape::new();
        let x = t.constant(mat(1, 2, &[1., 2.]));
        let w = t.leaf(Tensor::identity(2));
        let b = t.leaf(Tensor::vector(vec![0., 0.]));
        let y = t.affine(x, w, b).unwrap();
        assert_eq!(t.value(y).data(), &[1., 2.]);

        let w0 = t.leaf(Tensor::zeros(&[2, 3]));
        let b5 = t.leaf(Tensor::vector(vec![5., 5., 5.]));
        let y = t.affine(x, w0, b5).unwrap();
        assert_eq!(t.value(y).data(), &[5., 5., 5.]);

        let xi = t.constant(Tensor::identity(2));
        let wd = t.leaf(mat(2, 2, &[2., 0., 0., 3.]));
        let y = t.affine(xi, wd, b).unwrap();
        assert_eq!(t.value(y).data(), &[2., 0., 0., 3.]);
    }

    #[test]
    fn affine_shape_error_names_both_shapes() {
        let mut t = Tape::new();
        let x = t.constant(Tensor::zeros(&[1, 3]));
        let w = t.leaf(Tensor::zeros(&[2, 2]));
        let b = t.leaf(Tensor::zeros(&[2]));
        let msg = t.affine(x, w, b).unwrap_err().to_string();
        assert!(msg.contains("[1, 3]") && msg.contains("[2, 2]"), "{msg}");
    }

    #[test]
    fn relu_values_and_subgradient() {
        let mut t = Tape::new();
        let x = t.leaf(Tensor::vector(vec![-1., 0., 2., -3., 3.]));
        let y = t.relu(x);
        assert_eq!(t.value(y).data(), &[0., 0., 2., 0., 3.]);
        let s = t.sum(y);
        let g = t.backward(s).unwrap();
        assert_eq!(g.get(x).unwrap().data(), &[0., 0., 1., 0., 1.]);
    }

    #[test]
    fn layer_norm_examples() {
        let mut t = Tape::new();
        let ones = t.leaf(Tensor::full(&[3], 1.0));
        let zeros = t.leaf(Tensor::zeros(&[3]));
        let x = t.constant(mat(1, 3, &[5., 5., 5.]));
        let y = t.layer_norm(x, ones, zeros, 1e-6).unwrap();
        assert!(t.value(y).data().iter().all(|v| v.abs() < 1e-12));

        let g2 = t.leaf(Tensor::full(&[2], 1.0));
        let b2 = t.leaf(Tensor::zeros(&[2]));
        let x = t.constant(mat(1, 2, &[1., -1.]));
        let y = t.layer_norm(x, g2, b2, 1e-12).unwrap();
        assert!((t.value(y).data()[0] - 1.0).abs() < 1e-10);
        assert!((t.value(y).data()[1] + 1.0).abs() < 1e-10);

        let g0 = t.leaf(Tensor::zeros(&[3]));
        let bias = t.leaf(Tensor::vector(vec![0.5, -1., 2.]));
        let x = t.constant(mat(2, 3, &[1., 7., -2., 0.3, 0.1, 9.]));
        let y = t.layer_norm(x, g0, bias, 1e-6).unwrap();
        assert_eq!(t.value(y).data(), &[0.5, -1., 2., 0.5, -1., 2.]);
    }

    #[test]
    fn dropout_modes() {
        let mut t = Tape::new();
        let x = t.leaf(Tensor::vector(vec![1., 2., 3.]));
        let y = t.dropout(x, 0.7, &mut Mode::Eval).unwrap();
        assert_eq!(y, x);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let y = t.dropout(x, 0.0, &mut Mode::Train(&mut rng)).unwrap();
        assert_eq!(t.value(y).data(), &[1., 2., 3.]);
        assert!(t.dropout(x, 1.0, &mut Mode::Eval).is_err());
        assert!(t.dropout(x, -0.1, &mut Mode::Eval).is_err());
    }

    #[test]
    fn dropout_monte_carlo_mean() {
        // 1e5 draws of a scalar 1.0 at p = 0.5; stderr of the mean is 1/sqrt(1e5) ≈ 0.003
        let mut t = Tape::new();
        let x = t.constant(Tensor::full(&[100_000], 1.0));
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let y = t.dropout(x, 0.5, &mut Mode::Train(&mut rng)).unwrap();
        let mean = t.value(y).sum() / 100_000.0;
        assert!((mean - 1.0).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn dropout_is_deterministic_per_seed() {
        let run = |seed| {
            let mut t = Tape::new();
            let x = t.constant(Tensor::full(&[64], 1.0));
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let y = t.dropout(x, 0.3, &mut Mode::Train(&mut rng)).unwrap();
            t.value(y).clone()
        };
        assert_eq!(run(9).data(), run(9).data());
        assert_ne!(run(9).data(), run(10).data());
    }

    #[test]
    fn mse_examples() {
        let mut t = Tape::new();
        let p = t.leaf(mat(1, 2, &[1., 1.]));
        let z = t.constant(mat(1, 2, &[0., 0.]));
        let l = t.mse_loss(p, z).unwrap();
        assert_eq!(t.value(l).item(), 1.0);
        let l = t.mse_loss(p, p).unwrap();
        assert_eq!(t.value(l).item(), 0.0);
        let p = t.leaf(mat(2, 1, &[0., 0.]));
        let q = t.constant(mat(2, 1, &[3., -3.]));
        let l = t.mse_loss(p, q).unwrap();
        assert_eq!(t.value(l).item(), 9.0);
        assert!(t.mse_loss(p, z).is_err());
    }

    #[test]
    fn backward_scalar_examples() {
        let mut t = Tape::new();
        let w = t.leaf(Tensor::scalar(3.0));
        let c = t.leaf(Tensor::scalar(5.0));
        let sq = t.mul(w, w).unwrap();
        let g = t.backward(sq).unwrap();
        assert_eq!(g.get(w).unwrap().item(), 6.0);
        // constant wrt w
        let mut g = t.backward(c).unwrap();
        assert_eq!(g.take_or_zeros(w, &[]).item(), 0.0);
    }

    #[test]
    fn backward_rejects_non_scalar() {
        let mut t = Tape::new();
        let w = t.leaf(Tensor::zeros(&[2]));
        assert!(matches!(t.backward(w), Err(Error::Contract(_))));
    }

    #[test]
    fn constants_receive_no_gradient() {
        let mut t = Tape::new();
        let x = t.constant(mat(2, 2, &[1., 2., 3., 4.]));
        let w = t.leaf(Tensor::identity(2));
        let b = t.leaf(Tensor::zeros(&[2]));
        let y = t.affine(x, w, b).unwrap();
        let s = t.sum(y);
        let g = t.backward(s).unwrap();
        assert!(g.get(x).is_none());
        assert_eq!(g.get(b).unwrap().data(), &[2., 2.]);
    }

    #[test]
    fn concat_slice_reshape_route_gradients() {
        let mut t = Tape::new();
        let a = t.leaf(mat(2, 1, &[1., 2.]));
        let b = t.leaf(mat(2, 2, &[3., 4., 5., 6.]));
        let c = t.concat_cols(&[a, b]).unwrap();
        assert_eq!(t.value(c).data(), &[1., 3., 4., 2., 5., 6.]);
        let s = t.slice_cols(c, 1, 2).unwrap();
        let r = t.reshape(s, &[2]).unwrap();
        let weights = t.constant(Tensor::vector(vec![10., 100.]));
        let m = t.mul(r, weights).unwrap();
        let l = t.sum(m);
        let g = t.backward(l).unwrap();
        assert!(g.get(a).is_none_or(|g| g.data().iter().all(|v| *v == 0.0)));
        assert_eq!(g.get(b).unwrap().data(), &[10., 0., 100., 0.]);
    }

    #[test]
    fn min_relu_margin_reports_closest_kink() {
        let mut t = Tape::new();
        let x = t.leaf(Tensor::vector(vec![-0.5, 0.02, 3.0]));
        t.relu(x);
        assert!((t.min_relu_margin() - 0.02).abs() < 1e-15);
    }
}
