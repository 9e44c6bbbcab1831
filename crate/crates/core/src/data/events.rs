//! Semi-synthetic holiday-like events on top of a real dataset.
//!
//! Events share one timeline across series. An affected series is scaled
//! for the duration of every event; unaffected series are left alone. Eight
//! covariate columns announce the events: four for type A and four for
//! type B, each a noisy indicator around a type-specific mean.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::data::dataset::TimeSeriesDataset;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const TYPE_A_MEAN: [f64; 4] = [1.0, 2.0, 2.0, 1.0];
pub const TYPE_B_MEAN: [f64; 4] = [2.0, 1.0, 1.0, 2.0];
pub const EVENT_HOURS: usize = 24;

#[derive(Clone, Debug, PartialEq)]
pub struct EventConfig {
    /// Expected number of events over the whole timeline.
    pub expected_events: f64,
    pub affected_fraction: f64,
    /// Per-coordinate variance of the event covariates.
    pub covariate_variance: f64,
    pub type_a_factor: (f64, f64),
    pub type_b_divisor: (f64, f64),
}

impl Default for EventConfig {
    fn default() -> Self {
        EventConfig {
            expected_events: 40.0,
            affected_fraction: 0.8,
            covariate_variance: 0.1,
            type_a_factor: (3.0, 3.2),
            type_b_divisor: (2.0, 2.2),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EventKind {
    A,
    B,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Event {
    pub kind: EventKind,
    pub start: usize,
    pub len: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EventLog {
    pub affected: Vec<bool>,
    pub events: Vec<Event>,
}

impl EventLog {
    pub fn affected_fraction(&self) -> f64 {
        self.affected.iter().filter(|&&a| a).count() as f64 / self.affected.len() as f64
    }

    /// `[N · T]` mask of affected-series steps inside an event or within
    /// one event length after it.
    pub fn adjacent_mask(&self, len: usize) -> Vec<bool> {
        let mut on_timeline = vec![false; len];
        for e in &self.events {
            for slot in on_timeline.iter_mut().take((e.start + 2 * e.len).min(len)).skip(e.start) {
                *slot = true;
            }
        }
        self.affected
            .iter()
            .flat_map(|&a| on_timeline.iter().map(move |&m| a && m))
            .collect()
    }
}

/// Returns the dataset with scaled values and eight appended covariate
/// columns, plus the schedule that produced them.
pub fn inject_events(
    dataset: &TimeSeriesDataset,
    cfg: &EventConfig,
    rng: &mut ChaCha8Rng,
) -> Result<(TimeSeriesDataset, EventLog)> {
    if !(0.0..=1.0).contains(&cfg.affected_fraction) || cfg.expected_events < 0.0 || cfg.covariate_variance.is_nan() || cfg.covariate_variance < 0.0 {
        return Err(Error::Parameter(format!("invalid event configuration {cfg:?}")));
    }
    let (n, t) = (dataset.num_series(), dataset.len());
    let span = EVENT_HOURS * dataset.frequency.steps_per_hour();
    let affected: Vec<bool> = (0..n).map(|_| rng.random_bool(cfg.affected_fraction)).collect();

    let start_prob = (cfg.expected_events / t as f64).min(1.0);
    let mut events = Vec::new();
    let mut step = 0;
    while step + span <= t {
        if rng.random_bool(start_prob) {
            let kind = if rng.random_bool(0.5) { EventKind::A } else { EventKind::B };
            events.push(Event { kind, start: step, len: span });
            step += span;
        } else {
            step += 1;
        }
    }

    let mut out = dataset.clone();
    for e in &events {
        for (i, _) in affected.iter().enumerate().filter(|(_, &a)| a) {
            let factor = match e.kind {
                EventKind::A => rng.random_range(cfg.type_a_factor.0..=cfg.type_a_factor.1),
                EventKind::B => 1.0 / rng.random_range(cfg.type_b_divisor.0..=cfg.type_b_divisor.1),
            };
            for v in &mut out.values.row_mut(i)[e.start..e.start + e.len] {
                *v *= factor;
            }
        }
    }

    let mut kind_at = vec![None; t];
    for e in &events {
        for k in &mut kind_at[e.start..e.start + e.len] {
            *k = Some(e.kind);
        }
    }
    let noise = Normal::new(0.0, cfg.covariate_variance.sqrt()).expect("finite std");
    let mut cov = Vec::with_capacity(t * 8);
    for k in &kind_at {
        let (a, b) = match k {
            Some(EventKind::A) => (TYPE_A_MEAN, [0.0; 4]),
            Some(EventKind::B) => ([0.0; 4], TYPE_B_MEAN),
            None => ([0.0; 4], [0.0; 4]),
        };
        cov.extend(a.iter().chain(&b).map(|m| m + noise.sample(rng)));
    }
    let names = (0..4)
        .map(|j| format!("event_a{j}"))
        .chain((0..4).map(|j| format!("event_b{j}")))
        .collect();
    let out = out.with_covariates(names, Tensor::new(vec![t, 8], cov)?)?;
    Ok((out, EventLog { affected, events }))
}
