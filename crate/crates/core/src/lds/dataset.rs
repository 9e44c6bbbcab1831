use chrono::NaiveDate;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data::dataset::TimeSeriesDataset;
use crate::data::split::{Segment, SplitSpec};
use crate::data::windows::{enumerate_windows, Window, WindowPolicy};
use crate::error::Result;
use crate::lds::system::{rollout_with_inputs, sample_lds, seasonal_signal, LdsParams};
use crate::tensor::Tensor;

pub const STATE_DIM: usize = 30;
pub const INPUT_DIM: usize = 5;
pub const GAMMA: f64 = 0.95;
pub const NUM_SERIES: usize = 4;
pub const LOOKBACK: usize = 320;
pub const HORIZON: usize = 320;
pub const TRAIN_STEPS: usize = 1640;
pub const VAL_STEPS: usize = 740;
pub const TEST_STEPS: usize = 740;

/// Several roll-outs of one system that share inputs and seasonal drive
/// and differ only in transition noise.
#[derive(Clone, Debug)]
pub struct LdsDataset {
    pub params: LdsParams,
    /// Raw outputs `[NUM_SERIES, T]` with the observable inputs as covariates.
    pub dataset: TimeSeriesDataset,
    pub split: SplitSpec,
    pub train: Vec<Window>,
    pub val: Vec<Window>,
    pub test: Vec<Window>,
}

impl LdsDataset {
    pub fn windows(&self, segment: Segment) -> &[Window] {
        match segment {
            Segment::Train => &self.train,
            Segment::Val => &self.val,
            Segment::Test => &self.test,
        }
    }
}

/// Contained windows of a segment, without the one whose horizon ends
/// exactly at the segment end; `T_seg − L − H` per series.
fn segment_windows(start: usize, end: usize) -> Vec<Window> {
    enumerate_windows(NUM_SERIES, start, end, LOOKBACK, HORIZON, WindowPolicy::Contained)
        .into_iter()
        .filter(|w| w.anchor + HORIZON < end)
        .collect()
}

pub fn make_lds_dataset(seed: u64) -> Result<LdsDataset> {
    let params = sample_lds(seed, STATE_DIM, INPUT_DIM, 1, GAMMA)?;
    let len = TRAIN_STEPS + VAL_STEPS + TEST_STEPS;
    let mut input_rng = ChaCha8Rng::seed_from_u64(seed);
    input_rng.set_stream(1);
    let x_data: Vec<f64> = (0..len * INPUT_DIM).map(|_| StandardNormal.sample(&mut input_rng)).collect();
    let x = Tensor::new(vec![len, INPUT_DIM], x_data)?;
    let seasonal = seasonal_signal(len);

    let mut values = Vec::with_capacity(NUM_SERIES * len);
    for i in 0..NUM_SERIES {
        let mut noise_rng = ChaCha8Rng::seed_from_u64(seed);
        noise_rng.set_stream(2 + i as u64);
        let r = rollout_with_inputs(&params, x.clone(), seasonal.clone(), &mut noise_rng)?;
        values.extend_from_slice(r.y.data());
    }
    let start = NaiveDate::from_ymd_opt(2000, 1, 1).expect("valid date").and_hms_opt(0, 0, 0).expect("valid time");
    let stamps = TimeSeriesDataset::regular_timestamps(start, crate::data::Frequency::Hourly, len);
    let names = (0..NUM_SERIES).map(|i| format!("y{i}")).collect();
    let dataset = TimeSeriesDataset::new(names, Tensor::new(vec![NUM_SERIES, len], values)?, stamps)?
        .with_covariates((0..INPUT_DIM).map(|j| format!("x{j}")).collect(), x)?;
    let split = SplitSpec { train_end: TRAIN_STEPS, val_end: TRAIN_STEPS + VAL_STEPS, len };
    Ok(LdsDataset {
        params,
        dataset,
        train: segment_windows(0, split.train_end),
        val: segment_windows(split.train_end, split.val_end),
        test: segment_windows(split.val_end, len),
        split,
    })
}
