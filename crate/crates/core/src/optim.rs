//! Adam and the cosine-decay learning-rate schedule.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-7;

/// First/second moment estimates for a list of parameters.
#[derive(Clone, Debug)]
pub struct AdamState {
    pub m: Vec<Tensor>,
    pub v: Vec<Tensor>,
    pub step: u64,
}

impl AdamState {
    pub fn new(params: &[Tensor]) -> Self {
        AdamState {
            m: params.iter().map(|p| Tensor::zeros(p.shape())).collect(),
            v: params.iter().map(|p| Tensor::zeros(p.shape())).collect(),
            step: 0,
        }
    }
}

/// One bias-corrected Adam step, in place.
pub fn adam_update(params: &mut [Tensor], grads: &[Tensor], state: &mut AdamState, lr: f64) -> Result<()> {
    if lr.is_nan() || lr <= 0.0 {
        return Err(Error::Parameter(format!("learning rate must be positive, got {lr}")));
    }
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::Contract(format!(
            "adam_update: {} params, {} grads, {} moment slots",
            params.len(),
            grads.len(),
            state.m.len()
        )));
    }
    for (p, g) in params.iter().zip(grads) {
        if p.shape() != g.shape() {
            return Err(Error::dim("adam_update", p.shape(), g.shape()));
        }
    }
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - ADAM_BETA1.powi(t);
    let bc2 = 1.0 - ADAM_BETA2.powi(t);
    for (((p, g), m), v) in params.iter_mut().zip(grads).zip(&mut state.m).zip(&mut state.v) {
        let (pd, gd) = (p.data_mut(), g.data());
        for (((w, &gi), mi), vi) in pd.iter_mut().zip(gd).zip(m.data_mut()).zip(v.data_mut()) {
            *mi = ADAM_BETA1 * *mi + (1.0 - ADAM_BETA1) * gi;
            *vi = ADAM_BETA2 * *vi + (1.0 - ADAM_BETA2) * gi * gi;
            let m_hat = *mi / bc1;
            let v_hat = *vi / bc2;
            *w -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScheduleConfig {
    pub max_lr: f64,
    pub total_steps: u64,
}

impl ScheduleConfig {
    pub fn new(max_lr: f64, total_steps: u64) -> Result<Self> {
        if max_lr.is_nan() || max_lr <= 0.0 || total_steps == 0 {
            return Err(Error::Parameter(format!(
                "schedule needs max_lr > 0 and total_steps >= 1, got {max_lr} and {total_steps}"
            )));
        }
        Ok(ScheduleConfig { max_lr, total_steps })
    }
}

/// Cosine decay from `max_lr` at step 0 to 0 at `total_steps`.
pub fn cosine_lr(step: u64, cfg: &ScheduleConfig) -> Result<f64> {
    if step > cfg.total_steps {
        return Err(Error::Parameter(format!(
            "step {step} beyond schedule length {}",
            cfg.total_steps
        )));
    }
    let frac = step as f64 / cfg.total_steps as f64;
    Ok(cfg.max_lr * 0.5 * (1.0 + (PI * frac).cos()))
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = vec![Tensor::vector(vec![1.0, -2.0])];
        let g = vec![Tensor::zeros(&[2])];
        let mut s = AdamState::new(&p);
        adam_update(&mut p, &g, &mut s, 0.1).unwrap();
        assert_eq!(p[0].data(), &[1.0, -2.0]);
        assert_eq!(s.step, 1);
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut p = vec![Tensor::scalar(0.0)];
        let g = vec![Tensor::scalar(4.0)];
        let mut s = AdamState::new(&p);
        adam_update(&mut p, &g, &mut s, 0.1).unwrap();
        // m̂ = 4, v̂ = 16 on step 1
        let expected = -0.1 * 4.0 / (4.0 + ADAM_EPS);
        assert!((p[0].item() - expected).abs() < 1e-15);
        assert!((p[0].item() + 0.1).abs() < 1e-7);
    }

    #[test]
    fn two_steps_on_quadratic_shrink_monotonically() {
        // f(w) = w², w0 = 1, simulated by hand: each Adam step with a
        // same-sign gradient moves w by ≈ lr towards 0.
        let lr = 0.1;
        let mut p = vec![Tensor::scalar(1.0)];
        let mut s = AdamState::new(&p);
        let mut prev = 1.0;
        for _ in 0..2 {
            let g = vec![Tensor::scalar(2.0 * p[0].item())];
            adam_update(&mut p, &g, &mut s, lr).unwrap();
            assert!(p[0].item() < prev);
            assert!(p[0].item() > 0.0);
            prev = p[0].item();
        }
        // step 1: w = 0.9; step 2: m = 0.1·2 + 0.09·... worked out below
        let m1 = 0.1 * 2.0;
        let v1 = 0.001 * 4.0;
        let w1 = 1.0 - lr * (m1 / 0.1) / ((v1 / 0.001f64).sqrt() + ADAM_EPS);
        let g2 = 2.0 * w1;
        let m2 = 0.9 * m1 + 0.1 * g2;
        let v2 = 0.999 * v1 + 0.001 * g2 * g2;
        let w2 = w1 - lr * (m2 / (1.0 - 0.81)) / ((v2 / (1.0 - 0.999f64 * 0.999)).sqrt() + ADAM_EPS);
        assert!((p[0].item() - w2).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_lr_and_shapes() {
        let mut p = vec![Tensor::scalar(0.0)];
        let mut s = AdamState::new(&p);
        assert!(adam_update(&mut p, &[Tensor::scalar(1.0)], &mut s, 0.0).is_err());
        assert!(adam_update(&mut p, &[Tensor::zeros(&[2])], &mut s, 0.1).is_err());
        assert_eq!(s.step, 0);
    }

    #[test]
    fn cosine_examples() {
        let cfg = ScheduleConfig::new(0.5, 100).unwrap();
        assert_eq!(cosine_lr(0, &cfg).unwrap(), 0.5);
        assert!(cosine_lr(100, &cfg).unwrap().abs() < 1e-15);
        assert!((cosine_lr(50, &cfg).unwrap() - 0.25).abs() < 1e-15);
        assert!(cosine_lr(101, &cfg).is_err());
        assert!(ScheduleConfig::new(0.0, 10).is_err());
        assert!(ScheduleConfig::new(1.0, 0).is_err());
    }

    proptest! {
        #[test]
        fn cosine_is_nonincreasing(total in 1u64..5000, lr in 1e-6f64..1.0) {
            let cfg = ScheduleConfig::new(lr, total).unwrap();
            let mut prev = f64::INFINITY;
            for s in 0..=total {
                let v = cosine_lr(s, &cfg).unwrap();
                prop_assert!(v <= prev);
                prev = v;
            }
        }

        #[test]
        fn adam_step_counter_and_nonnegative_v(k in 1usize..20, g in prop::collection::vec(-5.0f64..5.0, 3)) {
            let mut p = vec![Tensor::vector(vec![0.0; 3])];
            let mut s = AdamState::new(&p);
            for _ in 0..k {
                adam_update(&mut p, &[Tensor::vector(g.clone())], &mut s, 1e-3).unwrap();
            }
            prop_assert_eq!(s.step, k as u64);
            prop_assert!(s.v[0].data().iter().all(|v| *v >= 0.0));
        }
    }
}
