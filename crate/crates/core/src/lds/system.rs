use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Periods of the hidden seasonal drive.
pub const SEASONAL_PERIODS: [usize; 6] = [10, 20, 40, 80, 160, 320];
pub const DEFAULT_ETA_STD: f64 = 0.1;
pub const DEFAULT_XI_STD: f64 = 0.0;

const POWER_ITER_TOL: f64 = 1e-13;
const POWER_ITER_MAX: usize = 100_000;

/// `h_t = A·h_{t−1} + B·u_t + η_t`, `y_t = C·h_t + D·x_t + ξ_t` with
/// `h_{−1} = 0`, where `u_t` is the observable input `x_t` plus any hidden
/// seasonal drive.
#[derive(Clone, Debug, PartialEq)]
pub struct LdsParams {
    /// `[d, d]`
    pub a: Tensor,
    /// `[d, n]`
    pub b: Tensor,
    /// `[m, d]`
    pub c: Tensor,
    /// `[m, n]`
    pub d: Tensor,
    pub eta_std: f64,
    pub xi_std: f64,
    pub gamma: f64,
}

impl LdsParams {
    pub fn state_dim(&self) -> usize {
        self.a.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.c.rows()
    }
}

fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Tensor {
    let data = (0..rows * cols).map(|_| StandardNormal.sample(rng)).collect();
    Tensor::new(vec![rows, cols], data).expect("rows × cols values")
}

fn clip_frobenius(t: Tensor, bound: f64) -> Tensor {
    let f = t.frobenius_norm();
    if f > bound {
        t.scale(bound / f)
    } else {
        t
    }
}

/// Largest eigenvalue of a symmetric positive semidefinite matrix.
pub fn top_eigenvalue(a: &Tensor) -> f64 {
    let n = a.rows();
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut lambda = 0.0;
    for _ in 0..POWER_ITER_MAX {
        let w = a.matvec(&v).expect("square matrix");
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        let next: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
        v = w.into_iter().map(|x| x / norm).collect();
        if (next - lambda).abs() <= POWER_ITER_TOL * next.abs() {
            return next;
        }
        lambda = next;
    }
    lambda
}

/// Wishart transition scaled to spectral norm `gamma`; Gaussian `B`, `C`,
/// `D` with Frobenius norms clipped to 1.
pub fn sample_lds(seed: u64, d: usize, n: usize, m: usize, gamma: f64) -> Result<LdsParams> {
    if d == 0 || n == 0 || m == 0 {
        return Err(Error::Parameter(format!("dimensions must be positive, got d={d}, n={n}, m={m}")));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::Parameter(format!("gamma must be in (0, 1), got {gamma}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = gaussian(d, d, &mut rng);
    let mut a = g.matmul(&g.transpose()?)?;
    for i in 0..d {
        for j in 0..i {
            let s = 0.5 * (a.get2(i, j) + a.get2(j, i));
            a.set2(i, j, s);
            a.set2(j, i, s);
        }
    }
    let a = a.scale(gamma / top_eigenvalue(&a));
    let b = clip_frobenius(gaussian(d, n, &mut rng), 1.0);
    let c = clip_frobenius(gaussian(m, d, &mut rng), 1.0);
    let dm = clip_frobenius(gaussian(m, n, &mut rng), 1.0);
    Ok(LdsParams { a, b, c, d: dm, eta_std: DEFAULT_ETA_STD, xi_std: DEFAULT_XI_STD, gamma })
}

/// Sum of unit-amplitude cosines over [`SEASONAL_PERIODS`].
pub fn seasonal_signal(len: usize) -> Vec<f64> {
    (0..len)
        .map(|t| {
            SEASONAL_PERIODS
                .iter()
                .map(|&p| (2.0 * std::f64::consts::PI * t as f64 / p as f64).cos())
                .sum()
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rollout {
    /// `[T, n]`
    pub x: Tensor,
    /// `[T, m]`
    pub y: Tensor,
    /// `[T, d]`
    pub h: Tensor,
    /// `[T, d]`
    pub eta: Tensor,
    /// `[T, m]`
    pub xi: Tensor,
    /// Hidden drive added to every input coordinate, zeros when off.
    pub seasonal: Vec<f64>,
}

/// Simulates with standard-normal inputs.
pub fn rollout(params: &LdsParams, len: usize, seed: u64, seasonality: bool) -> Result<Rollout> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = gaussian(len, params.input_dim(), &mut rng);
    let s = if seasonality { seasonal_signal(len) } else { vec![0.0; len] };
    rollout_with_inputs(params, x, s, &mut rng)
}

/// Simulates for given inputs and seasonal drive, drawing only the noise.
pub fn rollout_with_inputs(params: &LdsParams, x: Tensor, seasonal: Vec<f64>, rng: &mut ChaCha8Rng) -> Result<Rollout> {
    let (d, n, m) = (params.state_dim(), params.input_dim(), params.output_dim());
    let len = x.rows();
    if len == 0 || x.cols() != n || seasonal.len() != len {
        return Err(Error::dim("rollout", &[len, n], x.shape()));
    }
    let noise = |std: f64, rows: usize, cols: usize, rng: &mut ChaCha8Rng| -> Tensor {
        if std == 0.0 {
            return Tensor::zeros(&[rows, cols]);
        }
        let dist = Normal::new(0.0, std).expect("finite std");
        Tensor::new(vec![rows, cols], (0..rows * cols).map(|_| dist.sample(rng)).collect()).expect("sized")
    };
    let eta = noise(params.eta_std, len, d, rng);
    let xi = noise(params.xi_std, len, m, rng);
    let mut h = Tensor::zeros(&[len, d]);
    let mut y = Tensor::zeros(&[len, m]);
    let mut prev = vec![0.0; d];
    for (t, s) in seasonal.iter().enumerate().take(len) {
        let u: Vec<f64> = x.row(t).iter().map(|v| v + s).collect();
        let ah = params.a.matvec(&prev)?;
        let bu = params.b.matvec(&u)?;
        let state: Vec<f64> = (0..d).map(|i| ah[i] + bu[i] + eta.get2(t, i)).collect();
        let ch = params.c.matvec(&state)?;
        let dx = params.d.matvec(x.row(t))?;
        for j in 0..m {
            y.set2(t, j, ch[j] + dx[j] + xi.get2(t, j));
        }
        h.row_mut(t).copy_from_slice(&state);
        prev = state;
    }
    Ok(Rollout { x, y, h, eta, xi, seasonal })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_input_zero_noise_gives_zero_output() {
        let mut p = sample_lds(0, 6, 2, 1, 0.9).unwrap();
        p.eta_std = 0.0;
        let r = rollout_with_inputs(&p, Tensor::zeros(&[50, 2]), vec![0.0; 50], &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(r.y.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn stored_trajectory_satisfies_recurrence() {
        let p = sample_lds(1, 8, 3, 2, 0.95).unwrap();
        let r = rollout(&p, 200, 2, true).unwrap();
        let mut prev = vec![0.0; 8];
        for t in 0..200 {
            let u: Vec<f64> = r.x.row(t).iter().map(|v| v + r.seasonal[t]).collect();
            let ah = p.a.matvec(&prev).unwrap();
            let bu = p.b.matvec(&u).unwrap();
            for i in 0..8 {
                assert!((r.h.get2(t, i) - (ah[i] + bu[i] + r.eta.get2(t, i))).abs() < 1e-12);
            }
            let ch = p.c.matvec(r.h.row(t)).unwrap();
            let dx = p.d.matvec(r.x.row(t)).unwrap();
            for j in 0..2 {
                assert!((r.y.get2(t, j) - ch[j] - dx[j] - r.xi.get2(t, j)).abs() < 1e-12);
            }
            prev = r.h.row(t).to_vec();
        }
    }

    #[test]
    fn norms_are_clipped_and_seeds_differ() {
        let p = sample_lds(3, 30, 5, 1, 0.95).unwrap();
        for t in [&p.b, &p.c, &p.d] {
            assert!(t.frobenius_norm() <= 1.0 + 1e-12);
        }
        assert_ne!(p.a, sample_lds(4, 30, 5, 1, 0.95).unwrap().a);
        assert!(sample_lds(0, 3, 1, 1, 1.0).is_err());
    }
}
