use serde::Serialize;

use crate::error::Result;
use crate::lds::predictor::{decay_curve, decay_envelope, log_slope};
use crate::lds::system::{rollout, sample_lds};

pub const DECAY_KS: std::ops::RangeInclusive<usize> = 40..=200;
pub const DECAY_ROLLOUT_LEN: usize = 600;
/// Tolerance of the monotonicity check.
pub const MONOTONE_SLACK: f64 = 1e-13;

#[derive(Clone, Debug, Serialize)]
pub struct DecayReport {
    pub gamma: f64,
    pub ks: Vec<usize>,
    pub deviations: Vec<f64>,
    pub envelope: Vec<f64>,
    pub slope: f64,
    pub within_envelope: bool,
    pub monotone: bool,
}

impl DecayReport {
    pub fn curve_csv(&self) -> String {
        let mut s = String::from("k,deviation,envelope\n");
        for ((k, d), e) in self.ks.iter().zip(&self.deviations).zip(&self.envelope) {
            s.push_str(&format!("{k},{d:e},{e:e}\n"));
        }
        s
    }
}

/// Truncation error of the autoregressive predictor against window length
/// for a 30-state, 5-input system with `γ = 0.95`.
pub fn verify_decay(seed: u64) -> Result<DecayReport> {
    let params = sample_lds(seed, 30, 5, 1, 0.95)?;
    let r = rollout(&params, DECAY_ROLLOUT_LEN, seed, false)?;
    let ks: Vec<usize> = DECAY_KS.step_by(4).collect();
    let deviations = decay_curve(&params, &r, &ks)?;
    let envelope: Vec<f64> = ks.iter().map(|&k| decay_envelope(&params, &r.x, k)).collect();
    Ok(DecayReport {
        gamma: params.gamma,
        slope: log_slope(&ks, &deviations),
        within_envelope: deviations.iter().zip(&envelope).all(|(d, e)| d <= e),
        monotone: deviations.windows(2).all(|w| w[1] <= w[0] + MONOTONE_SLACK),
        ks,
        deviations,
        envelope,
    })
}
