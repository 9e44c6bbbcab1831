//! Central finite-difference verification of tape gradients.

use crate::error::{Error, Result};
use crate::tape::{Tape, Var};
use crate::tensor::Tensor;

/// Denominator floor for the relative error.
pub const REL_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// (parameter index, flat coordinate) of the worst entry.
    pub worst: Option<(usize, usize)>,
    pub analytic: f64,
    pub numeric: f64,
    pub coordinates: usize,
    /// Smallest |pre-activation| of any ReLU at the base point.
    pub relu_margin: f64,
}

fn evaluate<F>(f: &F, params: &[Tensor]) -> Result<(Tape, Vec<Var>, Var)>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    let mut tape = Tape::new();
    let vars: Vec<Var> = params.iter().map(|p| tape.leaf(p.clone())).collect();
    let out = f(&mut tape, &vars)?;
    if !tape.value(out).is_scalar() {
        return Err(Error::Contract("gradcheck function must return a scalar".into()));
    }
    Ok((tape, vars, out))
}

/// Compares reverse-mode gradients of `f` with
/// `(f(w + eps) − f(w − eps)) / (2·eps)` for every coordinate.
pub fn finite_diff_gradcheck<F>(f: F, params: &[Tensor], eps: f64) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    finite_diff_gradcheck_with(f, params, eps, |_| {})
}

/// As [`finite_diff_gradcheck`], with a hook to configure each tape
/// (used to inject backward faults).
pub fn finite_diff_gradcheck_with<F, C>(f: F, params: &[Tensor], eps: f64, configure: C) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
    C: Fn(&mut Tape),
{
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::Parameter(format!("gradcheck eps must be positive, got {eps}")));
    }
    let wrapped = |tape: &mut Tape, vars: &[Var]| {
        configure(tape);
        f(tape, vars)
    };
    let (tape, vars, out) = evaluate(&wrapped, params)?;
    let relu_margin = tape.min_relu_margin();
    let mut grads = tape.backward(out)?;
    let analytic: Vec<Tensor> = vars
        .iter()
        .zip(params)
        .map(|(v, p)| grads.take_or_zeros(*v, p.shape()))
        .collect();
    drop(tape);

    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: None,
        analytic: 0.0,
        numeric: 0.0,
        coordinates: 0,
        relu_margin,
    };
    let mut work: Vec<Tensor> = params.to_vec();
    for pi in 0..params.len() {
        for ci in 0..params[pi].len() {
            let orig = params[pi].data()[ci];
            work[pi].data_mut()[ci] = orig + eps;
            let (t, _, o) = evaluate(&f, &work)?;
            let plus = t.value(o).item();
            work[pi].data_mut()[ci] = orig - eps;
            let (t, _, o) = evaluate(&f, &work)?;
            let minus = t.value(o).item();
            work[pi].data_mut()[ci] = orig;

            let numeric = (plus - minus) / (2.0 * eps);
            let a = analytic[pi].data()[ci];
            let denom = a.abs().max(numeric.abs()).max(REL_FLOOR);
            let rel = (a - numeric).abs() / denom;
            report.coordinates += 1;
            if report.worst.is_none() || rel > report.max_rel_error {
                report.max_rel_error = rel;
                report.worst = Some((pi, ci));
                report.analytic = a;
                report.numeric = numeric;
            }
        }
    }
    Ok(report)
}
