use serde::Serialize;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

fn check(op: &'static str, pred: &Tensor, target: &Tensor) -> Result<()> {
    if pred.shape() != target.shape() {
        return Err(Error::dim(op, pred.shape(), target.shape()));
    }
    if pred.is_empty() {
        return Err(Error::Contract(format!("{op} of empty tensors")));
    }
    Ok(())
}

pub fn mse(pred: &Tensor, target: &Tensor) -> Result<f64> {
    check("mse", pred, target)?;
    let s: f64 = pred.data().iter().zip(target.data()).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(s / pred.len() as f64)
}

pub fn mae(pred: &Tensor, target: &Tensor) -> Result<f64> {
    check("mae", pred, target)?;
    let s: f64 = pred.data().iter().zip(target.data()).map(|(a, b)| (a - b).abs()).sum();
    Ok(s / pred.len() as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricsReport {
    pub mse: f64,
    pub mae: f64,
    pub window_count: usize,
    /// Mean squared error at each horizon step.
    pub per_step: Vec<f64>,
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain numeric fields")
    }
}

/// Running sums over `[B, H]` prediction blocks, in arrival order.
#[derive(Clone, Debug)]
pub struct MetricsAccumulator {
    sum_sq: f64,
    sum_abs: f64,
    count: usize,
    windows: usize,
    step_sq: Vec<f64>,
    step_count: Vec<usize>,
}

impl MetricsAccumulator {
    pub fn new(horizon: usize) -> Self {
        MetricsAccumulator {
            sum_sq: 0.0,
            sum_abs: 0.0,
            count: 0,
            windows: 0,
            step_sq: vec![0.0; horizon],
            step_count: vec![0; horizon],
        }
    }

    /// Adds the entries of `pred` vs `target` for which `keep(row, step)` holds.
    pub fn add_masked(&mut self, pred: &Tensor, target: &Tensor, keep: impl Fn(usize, usize) -> bool) -> Result<()> {
        if pred.shape() != target.shape() || pred.shape().len() != 2 || pred.cols() != self.step_sq.len() {
            return Err(Error::dim("metrics", pred.shape(), target.shape()));
        }
        for r in 0..pred.rows() {
            let mut any = false;
            for (j, (a, b)) in pred.row(r).iter().zip(target.row(r)).enumerate() {
                if !keep(r, j) {
                    continue;
                }
                let e = a - b;
                self.sum_sq += e * e;
                self.sum_abs += e.abs();
                self.step_sq[j] += e * e;
                self.step_count[j] += 1;
                self.count += 1;
                any = true;
            }
            if any {
                self.windows += 1;
            }
        }
        Ok(())
    }

    pub fn add(&mut self, pred: &Tensor, target: &Tensor) -> Result<()> {
        self.add_masked(pred, target, |_, _| true)
    }

    pub fn finish(self) -> Result<MetricsReport> {
        if self.count == 0 {
            return Err(Error::Contract("no entries were evaluated".into()));
        }
        let n = self.count as f64;
        Ok(MetricsReport {
            mse: self.sum_sq / n,
            mae: self.sum_abs / n,
            window_count: self.windows,
            per_step: self
                .step_sq
                .iter()
                .zip(&self.step_count)
                .map(|(s, &c)| if c == 0 { 0.0 } else { s / c as f64 })
                .collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn examples() {
        let p = Tensor::from_rows(&[vec![1.0, -1.0]]).unwrap();
        let z = Tensor::zeros(&[1, 2]);
        assert_eq!(mae(&p, &z).unwrap(), 1.0);
        assert_eq!(mse(&p, &p).unwrap(), 0.0);
        assert!(mse(&p, &Tensor::zeros(&[2, 1])).is_err());
    }

    #[test]
    fn json_shape() {
        let mut acc = MetricsAccumulator::new(2);
        acc.add(&Tensor::from_rows(&[vec![1.0, 2.0]]).unwrap(), &Tensor::zeros(&[1, 2])).unwrap();
        let v: serde_json::Value = serde_json::from_str(&acc.finish().unwrap().to_json()).unwrap();
        assert_eq!(v["mse"], 2.5);
        assert_eq!(v["window_count"], 1);
        assert_eq!(v["per_step"][1], 4.0);
    }

    proptest! {
        #[test]
        fn mae_bounded_by_rmse(v in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 1..40)) {
            let (p, t): (Vec<f64>, Vec<f64>) = v.into_iter().unzip();
            let p = Tensor::vector(p);
            let t = Tensor::vector(t);
            prop_assert!(mae(&p, &t).unwrap() <= mse(&p, &t).unwrap().sqrt() * (1.0 + 1e-12) + 1e-12);
        }
    }
}
