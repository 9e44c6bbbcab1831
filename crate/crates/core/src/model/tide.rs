use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::windows::WindowBatch;
use crate::error::{Error, Result};
use crate::model::block::{BlockShape, ResidualBlock};
use crate::model::config::{ModelConfig, Variant, REVIN_EPS};
use crate::params::{glorot_uniform, ParamId, ParamStore};
use crate::tape::{Mode, Tape, Var};
use crate::tensor::Tensor;

/// Head mapping each decoded vector `d_t` to one prediction.
#[derive(Clone, Debug, PartialEq)]
pub enum TemporalHead {
    /// Residual block over `[d_t ; projected covariates at t]`.
    Block(ResidualBlock),
    /// Affine map of `d_t` alone.
    Affine(ParamId, ParamId),
}

/// Structured handles into the parameter store.
#[derive(Clone, Debug, PartialEq)]
pub struct Layout {
    pub feature_projection: Option<ResidualBlock>,
    pub encoder: Vec<ResidualBlock>,
    pub decoder: Vec<ResidualBlock>,
    pub temporal: Option<TemporalHead>,
    pub global_residual: Option<(ParamId, ParamId)>,
    pub revin: Option<(ParamId, ParamId)>,
}

enum Builder<'a> {
    Init(&'a mut ParamStore, &'a mut ChaCha8Rng),
    Bind(&'a ParamStore),
}

impl Builder<'_> {
    fn block(&mut self, prefix: &str, shape: BlockShape) -> Result<ResidualBlock> {
        match self {
            Builder::Init(store, rng) => ResidualBlock::init(store, prefix, shape, rng),
            Builder::Bind(store) => ResidualBlock::bind(store, prefix, shape),
        }
    }

    fn pair(&mut self, names: [&str; 2], shapes: [&[usize]; 2], init: impl FnOnce(&mut ChaCha8Rng) -> [Tensor; 2]) -> Result<(ParamId, ParamId)> {
        match self {
            Builder::Init(store, rng) => {
                let [a, b] = init(rng);
                Ok((store.insert(names[0], a)?, store.insert(names[1], b)?))
            }
            Builder::Bind(store) => {
                let mut ids = [ParamId(0); 2];
                for k in 0..2 {
                    let id = store
                        .id(names[k])
                        .ok_or_else(|| Error::Checkpoint(format!("missing parameter {}", names[k])))?;
                    if store.get(id).shape() != shapes[k] {
                        return Err(Error::Checkpoint(format!(
                            "{}: expected shape {:?}, found {:?}",
                            names[k],
                            shapes[k],
                            store.get(id).shape()
                        )));
                    }
                    ids[k] = id;
                }
                Ok((ids[0], ids[1]))
            }
        }
    }

    fn affine(&mut self, prefix: &str, input: usize, output: usize) -> Result<(ParamId, ParamId)> {
        self.pair(
            [&format!("{prefix}.W"), &format!("{prefix}.b")],
            [&[input, output], &[output]],
            |rng| [glorot_uniform(input, output, rng), Tensor::zeros(&[output])],
        )
    }
}

fn build_layout(cfg: &ModelConfig, variant: Variant, mut b: Builder<'_>) -> Result<Layout> {
    let (l, h, p) = (cfg.lookback, cfg.horizon, cfg.decoder_output_dim);
    let rt = cfg.projected_width();
    let hs = cfg.hidden_size;
    let shape = |input, hidden, output| BlockShape {
        input,
        hidden,
        output,
        skip: variant.has_skip(),
        layer_norm: cfg.layer_norm,
    };
    let revin = if cfg.rev_in {
        let n = cfg.num_series;
        Some(b.pair(["revin.gain", "revin.bias"], [&[n], &[n]], |_| {
            [Tensor::full(&[n], 1.0), Tensor::zeros(&[n])]
        })?)
    } else {
        None
    };
    let mut layout = Layout {
        feature_projection: None,
        encoder: Vec::new(),
        decoder: Vec::new(),
        temporal: None,
        global_residual: None,
        revin,
    };
    if variant != Variant::LinearOnly {
        if rt > 0 {
            let fp = shape(cfg.covariate_dim, cfg.feature_projection_hidden(), rt);
            layout.feature_projection = Some(b.block("feature_projection", fp)?);
        }
        for i in 0..cfg.num_encoder_layers {
            let input = if i == 0 { cfg.encoder_input_width() } else { hs };
            layout.encoder.push(b.block(&format!("encoder.block{i}"), shape(input, hs, hs))?);
        }
        for i in 0..cfg.num_decoder_layers {
            let out = if i + 1 == cfg.num_decoder_layers { p * h } else { hs };
            layout.decoder.push(b.block(&format!("decoder.block{i}"), shape(hs, hs, out))?);
        }
        layout.temporal = Some(match variant {
            Variant::NoTemporalDecoder => {
                let (w, bias) = b.affine("temporal_decoder", p, 1)?;
                TemporalHead::Affine(w, bias)
            }
            _ => TemporalHead::Block(b.block("temporal_decoder", shape(p + rt, cfg.temporal_decoder_hidden, 1))?),
        });
    }
    if variant.has_global_residual() {
        layout.global_residual = Some(b.affine("global_residual", l, h)?);
    }
    Ok(layout)
}

/// Per-row look-back statistics used by reversible instance normalization.
#[derive(Clone, Debug, PartialEq)]
pub struct RevinStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl RevinStats {
    pub fn of(lookback: &Tensor) -> Self {
        let (mut mean, mut std) = (Vec::new(), Vec::new());
        for r in 0..lookback.rows() {
            let row = lookback.row(r);
            let n = row.len() as f64;
            let m = row.iter().sum::<f64>() / n;
            let var = row.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
            mean.push(m);
            std.push((var + REVIN_EPS).sqrt());
        }
        RevinStats { mean, std }
    }
}

/// Standardizes every row of `lookback: [B, L]` by its own mean and std.
pub fn revin_normalize(lookback: &Tensor) -> (Tensor, RevinStats) {
    let stats = RevinStats::of(lookback);
    let mut out = lookback.clone();
    for r in 0..out.rows() {
        let (m, s) = (stats.mean[r], stats.std[r]);
        out.row_mut(r).iter_mut().for_each(|v| *v = (*v - m) / s);
    }
    (out, stats)
}

pub fn revin_denormalize(pred: &Tensor, stats: &RevinStats) -> Result<Tensor> {
    if pred.shape().len() != 2 || pred.rows() != stats.mean.len() {
        return Err(Error::dim("revin_denormalize", pred.shape(), &[stats.mean.len()]));
    }
    let mut out = pred.clone();
    for r in 0..out.rows() {
        let (m, s) = (stats.mean[r], stats.std[r]);
        out.row_mut(r).iter_mut().for_each(|v| *v = *v * s + m);
    }
    Ok(out)
}

/// A configured network together with its parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct TiDEParams {
    pub config: ModelConfig,
    pub variant: Variant,
    pub store: ParamStore,
    layout: Layout,
}

impl TiDEParams {
    /// Glorot-uniform weights, zero biases, unit gains.
    pub fn init(config: &ModelConfig, variant: Variant, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::new();
        let layout = build_layout(config, variant, Builder::Init(&mut store, &mut rng))?;
        Ok(TiDEParams { config: config.clone(), variant, store, layout })
    }

    /// Rebinds a store produced elsewhere, checking every name and shape.
    pub fn from_store(config: &ModelConfig, variant: Variant, store: ParamStore) -> Result<Self> {
        config.validate()?;
        let layout = build_layout(config, variant, Builder::Bind(&store))?;
        let used: usize = TiDEParams { config: config.clone(), variant, store: ParamStore::new(), layout: layout.clone() }
            .layout_ids()
            .len();
        if used != store.len() {
            return Err(Error::Checkpoint(format!(
                "store holds {} tensors, the configuration uses {used}",
                store.len()
            )));
        }
        Ok(TiDEParams { config: config.clone(), variant, store, layout })
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    fn layout_ids(&self) -> Vec<ParamId> {
        let l = &self.layout;
        let mut ids = Vec::new();
        ids.extend(l.revin.iter().flat_map(|&(a, b)| [a, b]));
        ids.extend(l.feature_projection.iter().flat_map(ResidualBlock::param_ids));
        ids.extend(l.encoder.iter().chain(&l.decoder).flat_map(ResidualBlock::param_ids));
        match &l.temporal {
            Some(TemporalHead::Block(b)) => ids.extend(b.param_ids()),
            Some(TemporalHead::Affine(w, b)) => ids.extend([*w, *b]),
            None => {}
        }
        ids.extend(l.global_residual.iter().flat_map(|&(a, b)| [a, b]));
        ids
    }

    /// Places parameters on `tape` as constants (no gradient bookkeeping).
    pub fn constants(&self, tape: &mut Tape) -> Vec<Var> {
        self.store.tensors().iter().map(|t| tape.constant(t.clone())).collect()
    }

    fn check_batch(&self, batch: &WindowBatch) -> Result<()> {
        let c = &self.config;
        let b = batch.len();
        let expect_cov = [b, c.lookback + c.horizon, c.covariate_dim];
        if batch.lookback.shape() != [b, c.lookback]
            || batch.target.shape() != [b, c.horizon]
            || batch.covariates.shape() != expect_cov
            || batch.static_attrs.shape() != [b, c.static_dim]
        {
            return Err(Error::Contract(format!(
                "batch shapes lookback {:?}, target {:?}, covariates {:?}, static {:?} do not fit L={}, H={}, r={}, s={}",
                batch.lookback.shape(),
                batch.target.shape(),
                batch.covariates.shape(),
                batch.static_attrs.shape(),
                c.lookback,
                c.horizon,
                c.covariate_dim,
                c.static_dim
            )));
        }
        if b == 0 {
            return Err(Error::Contract("empty batch".into()));
        }
        if c.rev_in {
            if let Some(&i) = batch.series_index.iter().find(|&&i| i >= c.num_series) {
                return Err(Error::Contract(format!("series index {i} outside 0..{}", c.num_series)));
            }
        }
        Ok(())
    }

    /// Full forward pass on an existing tape; `vars[k]` must hold the
    /// `k`-th tensor of the store. Returns `[B, H]`.
    pub fn forward_on_tape(&self, tape: &mut Tape, vars: &[Var], batch: &WindowBatch, mode: &mut Mode<'_>) -> Result<Var> {
        self.check_batch(batch)?;
        if vars.len() != self.store.len() {
            return Err(Error::Contract(format!("{} vars for {} parameters", vars.len(), self.store.len())));
        }
        let c = &self.config;
        let (b, l, h) = (batch.len(), c.lookback, c.horizon);
        let v = |id: ParamId| vars[id.index()];
        let lay = &self.layout;

        let mut y = tape.constant(batch.lookback.clone());
        let mut stats = None;
        if let Some((gain, bias)) = lay.revin {
            let st = RevinStats::of(&batch.lookback);
            let mul: Vec<f64> = st.std.iter().map(|s| 1.0 / s).collect();
            let add: Vec<f64> = st.mean.iter().zip(&st.std).map(|(m, s)| -m / s).collect();
            y = tape.row_affine(y, &mul, &add)?;
            y = tape.gather_scale_shift(y, v(gain), v(bias), &batch.series_index)?;
            stats = Some(st);
        }

        let mut pred = None;
        if let Some(head) = &lay.temporal {
            let rt = c.projected_width();
            let mut parts = vec![y];
            let mut future = None;
            if let Some(fp) = &lay.feature_projection {
                let x = tape.constant(batch.covariates.clone().reshape(&[b * (l + h), c.covariate_dim])?);
                let proj = fp.apply(tape, vars, x, c.dropout, mode)?;
                let flat = tape.reshape(proj, &[b, (l + h) * rt])?;
                let fut = tape.slice_cols(flat, l * rt, (l + h) * rt)?;
                future = Some(tape.reshape(fut, &[b * h, rt])?);
                parts.push(flat);
            }
            if c.static_dim > 0 {
                parts.push(tape.constant(batch.static_attrs.clone()));
            }
            let mut e = tape.concat_cols(&parts)?;
            for blk in lay.encoder.iter().chain(&lay.decoder) {
                e = blk.apply(tape, vars, e, c.dropout, mode)?;
            }
            let d = tape.reshape(e, &[b * h, c.decoder_output_dim])?;
            let out = match head {
                TemporalHead::Block(blk) => {
                    let inp = match future {
                        Some(f) => tape.concat_cols(&[d, f])?,
                        None => d,
                    };
                    blk.apply(tape, vars, inp, c.dropout, mode)?
                }
                TemporalHead::Affine(w, bias) => tape.affine(d, v(*w), v(*bias))?,
            };
            pred = Some(tape.reshape(out, &[b, h])?);
        }
        if let Some((w, bias)) = lay.global_residual {
            let g = tape.affine(y, v(w), v(bias))?;
            pred = Some(match pred {
                Some(p) => tape.add(p, g)?,
                None => g,
            });
        }
        let mut pred = pred.ok_or_else(|| Error::Contract("variant produces no output path".into()))?;

        if let (Some((gain, bias)), Some(st)) = (lay.revin, stats) {
            pred = tape.gather_unscale_shift(pred, v(gain), v(bias), &batch.series_index, REVIN_EPS)?;
            pred = tape.row_affine(pred, &st.std, &st.mean)?;
        }
        Ok(pred)
    }

    /// Predictions `[B, H]`.
    pub fn forward(&self, batch: &WindowBatch, mode: &mut Mode<'_>) -> Result<Tensor> {
        let mut tape = Tape::new();
        let vars = self.constants(&mut tape);
        let out = self.forward_on_tape(&mut tape, &vars, batch, mode)?;
        Ok(tape.value(out).clone())
    }

    /// Runs `f` on a fresh tape holding the parameters as constants.
    fn eval_with<T>(&self, f: impl FnOnce(&mut Tape, &[Var]) -> Result<T>) -> Result<T> {
        let mut tape = Tape::new();
        let vars = self.constants(&mut tape);
        f(&mut tape, &vars)
    }

    /// Applies the feature projection to each row of `x: [L + H, r]`.
    pub fn project_features(&self, x: &Tensor) -> Result<Tensor> {
        let c = &self.config;
        if x.shape() != [c.lookback + c.horizon, c.covariate_dim] {
            return Err(Error::Contract(format!(
                "covariates must be [{}, {}], got {:?}",
                c.lookback + c.horizon,
                c.covariate_dim,
                x.shape()
            )));
        }
        match &self.layout.feature_projection {
            None => Ok(Tensor::zeros(&[x.rows(), 0])),
            Some(fp) => self.eval_with(|t, vars| {
                let xv = t.constant(x.clone());
                let y = fp.apply(t, vars, xv, 0.0, &mut Mode::Eval)?;
                Ok(t.value(y).clone())
            }),
        }
    }

    /// Encoder output for one series from its look-back, projected
    /// covariates `[L + H, r̃]` and static attributes.
    pub fn encode(&self, y_past: &[f64], projected: &Tensor, attrs: &[f64]) -> Result<Vec<f64>> {
        let c = &self.config;
        let rt = c.projected_width();
        if y_past.len() != c.lookback || projected.len() != (c.lookback + c.horizon) * rt || attrs.len() != c.static_dim {
            return Err(Error::Contract(format!(
                "encode: got lookback {}, projected {:?}, static {}",
                y_past.len(),
                projected.shape(),
                attrs.len()
            )));
        }
        let mut input = y_past.to_vec();
        input.extend_from_slice(projected.data());
        input.extend_from_slice(attrs);
        self.eval_with(|t, vars| {
            let mut e = t.constant(Tensor::new(vec![1, input.len()], input)?);
            for blk in &self.layout.encoder {
                e = blk.apply(t, vars, e, 0.0, &mut Mode::Eval)?;
            }
            Ok(t.value(e).data().to_vec())
        })
    }

    /// Decoder output reshaped to `[p, H]`; column `t` is the decoded
    /// vector for horizon step `t`.
    pub fn decode(&self, e: &[f64]) -> Result<Tensor> {
        let c = &self.config;
        if e.len() != c.hidden_size {
            return Err(Error::dim("decode", &[c.hidden_size], &[e.len()]));
        }
        let g = self.eval_with(|t, vars| {
            let mut x = t.constant(Tensor::new(vec![1, e.len()], e.to_vec())?);
            for blk in &self.layout.decoder {
                x = blk.apply(t, vars, x, 0.0, &mut Mode::Eval)?;
            }
            Ok(t.value(x).clone())
        })?;
        g.reshape(&[c.horizon, c.decoder_output_dim])?.transpose()
    }

    /// Per-step head applied to `d: [p, H]` and future projected covariates `[H, r̃]`.
    pub fn temporal_decode(&self, d: &Tensor, future: &Tensor) -> Result<Vec<f64>> {
        let c = &self.config;
        let (p, h, rt) = (c.decoder_output_dim, c.horizon, c.projected_width());
        if d.shape() != [p, h] {
            return Err(Error::Contract(format!("decoded matrix must be [{p}, {h}], got {:?}", d.shape())));
        }
        if future.len() != h * rt || (rt > 0 && future.rows() != h) {
            return Err(Error::Contract(format!("future covariates must be [{h}, {rt}], got {:?}", future.shape())));
        }
        let head = self
            .layout
            .temporal
            .as_ref()
            .ok_or_else(|| Error::Contract("variant has no temporal head".into()))?;
        let dt = d.transpose()?;
        self.eval_with(|t, vars| {
            let dv = t.constant(dt);
            let out = match head {
                TemporalHead::Block(blk) => {
                    let inp = if rt > 0 {
                        let f = t.constant(future.clone().reshape(&[h, rt])?);
                        t.concat_cols(&[dv, f])?
                    } else {
                        dv
                    };
                    blk.apply(t, vars, inp, 0.0, &mut Mode::Eval)?
                }
                TemporalHead::Affine(w, b) => t.affine(dv, vars[w.index()], vars[b.index()])?,
            };
            Ok(t.value(out).data().to_vec())
        })
    }

    /// Affine look-back → horizon map (zero when the variant has none).
    pub fn global_residual(&self, y_past: &[f64]) -> Result<Vec<f64>> {
        let c = &self.config;
        if y_past.len() != c.lookback {
            return Err(Error::dim("global_residual", &[c.lookback], &[y_past.len()]));
        }
        match self.layout.global_residual {
            None => Ok(vec![0.0; c.horizon]),
            Some((w, b)) => {
                let x = Tensor::new(vec![1, c.lookback], y_past.to_vec())?;
                let mut y = x.matmul(self.store.get(w))?;
                y.add_assign(&self.store.get(b).clone().reshape(&[1, c.horizon])?)?;
                Ok(y.into_data())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcheck::finite_diff_gradcheck;

    fn batch(cfg: &ModelConfig, b: usize, seed: u64) -> WindowBatch {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (l, h, r, s) = (cfg.lookback, cfg.horizon, cfg.covariate_dim, cfg.static_dim);
        let mut rand = |n: usize| {
            use rand::Rng;
            (0..n).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<f64>>()
        };
        WindowBatch {
            lookback: Tensor::new(vec![b, l], rand(b * l)).unwrap(),
            target: Tensor::new(vec![b, h], rand(b * h)).unwrap(),
            covariates: Tensor::new(vec![b, l + h, r], rand(b * (l + h) * r)).unwrap(),
            static_attrs: Tensor::new(vec![b, s], rand(b * s)).unwrap(),
            series_index: (0..b).map(|i| i % cfg.num_series).collect(),
            anchor: vec![0; b],
        }
    }

    fn cfg() -> ModelConfig {
        let mut c = ModelConfig::small(6, 3, 3);
        c.static_dim = 2;
        c.layer_norm = true;
        c.rev_in = true;
        c.num_series = 4;
        c
    }

    #[test]
    fn param_count_matches_traversal() {
        for variant in [Variant::Full, Variant::NoTemporalDecoder, Variant::NoResiduals, Variant::LinearOnly] {
            for c in [cfg(), ModelConfig::small(5, 2, 0)] {
                let m = TiDEParams::init(&c, variant, 0).unwrap();
                assert_eq!(m.store.scalar_count(), c.param_count(variant), "{variant}");
                assert_eq!(m.layout_ids().len(), m.store.len());
            }
        }
    }

    #[test]
    fn output_shape_and_eval_determinism() {
        let c = cfg();
        let m = TiDEParams::init(&c, Variant::Full, 1).unwrap();
        let bt = batch(&c, 5, 2);
        let a = m.forward(&bt, &mut Mode::Eval).unwrap();
        let b = m.forward(&bt, &mut Mode::Eval).unwrap();
        assert_eq!(a.shape(), &[5, 3]);
        assert_eq!(a, b);
    }

    #[test]
    fn row_permutation_is_equivariant() {
        let c = cfg();
        let m = TiDEParams::init(&c, Variant::Full, 3).unwrap();
        let bt = batch(&c, 4, 4);
        let perm = [2, 0, 3, 1];
        let mut pb = bt.clone();
        for (dst, &src) in perm.iter().enumerate() {
            pb.lookback.row_mut(dst).copy_from_slice(bt.lookback.row(src));
            pb.static_attrs.row_mut(dst).copy_from_slice(bt.static_attrs.row(src));
            let w = (c.lookback + c.horizon) * c.covariate_dim;
            pb.covariates.data_mut()[dst * w..(dst + 1) * w].copy_from_slice(&bt.covariates.data()[src * w..(src + 1) * w]);
            pb.series_index[dst] = bt.series_index[src];
        }
        let a = m.forward(&bt, &mut Mode::Eval).unwrap();
        let b = m.forward(&pb, &mut Mode::Eval).unwrap();
        for (dst, &src) in perm.iter().enumerate() {
            for (x, y) in b.row(dst).iter().zip(a.row(src)) {
                assert!((x - y).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn composed_ops_match_forward() {
        let mut c = cfg();
        c.rev_in = false;
        let m = TiDEParams::init(&c, Variant::Full, 5).unwrap();
        let bt = batch(&c, 1, 6);
        let x = bt.covariates.clone().reshape(&[c.lookback + c.horizon, c.covariate_dim]).unwrap();
        let xt = m.project_features(&x).unwrap();
        assert_eq!(xt.shape(), &[9, 2]);
        let e = m.encode(bt.lookback.row(0), &xt, bt.static_attrs.row(0)).unwrap();
        let d = m.decode(&e).unwrap();
        assert_eq!(d.shape(), &[4, 3]);
        let fut = xt.slice_rows(c.lookback, c.lookback + c.horizon).unwrap();
        let nonres = m.temporal_decode(&d, &fut).unwrap();
        let g = m.global_residual(bt.lookback.row(0)).unwrap();
        let full = m.forward(&bt, &mut Mode::Eval).unwrap();
        for t in 0..3 {
            assert!((nonres[t] + g[t] - full.get2(0, t)).abs() < 1e-12);
        }
    }

    #[test]
    fn decode_columns_are_consecutive_chunks() {
        let mut c = ModelConfig::small(4, 3, 0);
        c.decoder_output_dim = 2;
        let m = TiDEParams::init(&c, Variant::Full, 8).unwrap();
        let e: Vec<f64> = (0..c.hidden_size).map(|i| (i as f64).cos()).collect();
        let d = m.decode(&e).unwrap();
        let flat = d.transpose().unwrap().into_data();
        for t in 0..3 {
            assert_eq!(d.get2(0, t), flat[2 * t]);
            assert_eq!(d.get2(1, t), flat[2 * t + 1]);
        }
    }

    #[test]
    fn feature_projection_rows_are_independent() {
        let c = cfg();
        let m = TiDEParams::init(&c, Variant::Full, 9).unwrap();
        let x = batch(&c, 1, 10).covariates.reshape(&[9, 3]).unwrap();
        let y = m.project_features(&x).unwrap();
        let mut xs = x.clone();
        xs.row_mut(0).copy_from_slice(x.row(4));
        xs.row_mut(4).copy_from_slice(x.row(0));
        let ys = m.project_features(&xs).unwrap();
        assert_eq!(ys.row(0), y.row(4));
        assert_eq!(ys.row(4), y.row(0));
        assert!(matches!(m.project_features(&Tensor::zeros(&[8, 3])), Err(Error::Contract(_))));
        let none = TiDEParams::init(&ModelConfig::small(6, 3, 0), Variant::Full, 0).unwrap();
        assert_eq!(none.project_features(&Tensor::zeros(&[9, 0])).unwrap().shape(), &[9, 0]);
    }

    #[test]
    fn revin_round_trip_and_constant_lookback() {
        let x = Tensor::from_rows(&[vec![1.0, 5.0, -2.0, 0.5], vec![3.0, 3.0, 3.0, 3.0]]).unwrap();
        let (z, st) = revin_normalize(&x);
        assert!(z.row(1).iter().all(|&v| v == 0.0));
        let back = revin_denormalize(&z, &st).unwrap();
        for (a, b) in back.data().iter().zip(x.data()) {
            assert!((a - b).abs() < 1e-10);
        }
        let flat = revin_denormalize(&Tensor::zeros(&[2, 3]), &st).unwrap();
        assert!(flat.row(1).iter().all(|&v| v == 3.0));
    }

    #[test]
    fn full_model_gradcheck() {
        let mut c = cfg();
        c.dropout = 0.0;
        let m = TiDEParams::init(&c, Variant::Full, 11).unwrap();
        let bt = batch(&c, 3, 12);
        let r = finite_diff_gradcheck(
            |t, vars| {
                let y = m.forward_on_tape(t, vars, &bt, &mut Mode::Eval)?;
                let target = t.constant(bt.target.clone());
                t.mse_loss(y, target)
            },
            m.store.tensors(),
            1e-5,
        )
        .unwrap();
        assert!(r.relu_margin > 1e-4, "{r:?}");
        assert!(r.max_rel_error < 1e-4, "{r:?}");
    }
}
