//! The exact one-step LDS predictor and its truncated autoregressive
//! approximation.
//!
//! Times are zero-based: `x` holds rows `x_0, …, x_t` and the predictor
//! for step `t` uses every input up to `x_t` and the previous output.

use crate::error::{Error, Result};
use crate::lds::system::{LdsParams, Rollout};
use crate::tensor::Tensor;

/// `K_i = C·A^{i−1}·(A − I)·B` for `i = 1..=count`, each `[m, n]`.
pub fn impulse_differences(params: &LdsParams, count: usize) -> Result<Vec<Tensor>> {
    let d = params.state_dim();
    let a_minus_i = params.a.sub(&Tensor::identity(d))?;
    let amib = a_minus_i.matmul(&params.b)?;
    let mut row = params.c.clone();
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        out.push(row.matmul(&amib)?);
        row = row.matmul(&params.a)?;
    }
    Ok(out)
}

fn add_matvec(acc: &mut [f64], m: &Tensor, v: &[f64], sign: f64) -> Result<()> {
    for (a, b) in acc.iter_mut().zip(m.matvec(v)?) {
        *a += sign * b;
    }
    Ok(())
}

fn predictor_with(params: &LdsParams, kernel: &[Tensor], x: &Tensor, t: usize, y_prev: &[f64]) -> Result<Vec<f64>> {
    let cb_d = params.c.matmul(&params.b)?.add(&params.d)?;
    let mut out = y_prev.to_vec();
    add_matvec(&mut out, &cb_d, x.row(t), 1.0)?;
    add_matvec(&mut out, &params.d, x.row(t - 1), -1.0)?;
    for i in 1..=t {
        add_matvec(&mut out, &kernel[i - 1], x.row(t - i), 1.0)?;
    }
    Ok(out)
}

/// `ŷ_t = y_{t−1} + (CB + D)·x_t − D·x_{t−1} + Σ_{i=1}^{t} C(Aⁱ − A^{i−1})B·x_{t−i}`
/// where `t = x.rows() − 1`.
pub fn lds_predictor(params: &LdsParams, x: &Tensor, y_prev: &[f64]) -> Result<Vec<f64>> {
    if x.shape().len() != 2 || x.rows() < 2 {
        return Err(Error::Contract(format!("the predictor needs at least two inputs, got {:?}", x.shape())));
    }
    if x.cols() != params.input_dim() || y_prev.len() != params.output_dim() {
        return Err(Error::dim("lds_predictor", &[params.input_dim(), params.output_dim()], &[x.cols(), y_prev.len()]));
    }
    let t = x.rows() - 1;
    let kernel = impulse_differences(params, t)?;
    predictor_with(params, &kernel, x, t, y_prev)
}

/// Autoregressive coefficients over `(x_{t−k}, …, x_{t−1}, x_t, y_{t−1})`.
#[derive(Clone, Debug, PartialEq)]
pub struct ArCoeffs {
    /// `[m, (k + 1)·n + m]`
    pub m: Tensor,
    pub k: usize,
    pub input_dim: usize,
}

impl ArCoeffs {
    pub fn output_dim(&self) -> usize {
        self.m.rows()
    }

    pub fn window_len(&self) -> usize {
        (self.k + 1) * self.input_dim + self.output_dim()
    }

    /// Columns multiplying `x_{t−lag}`.
    pub fn input_block(&self, lag: usize) -> Result<Tensor> {
        if lag > self.k {
            return Err(Error::Contract(format!("lag {lag} exceeds window {}", self.k)));
        }
        let start = (self.k - lag) * self.input_dim;
        self.m.slice_cols(start, start + self.input_dim)
    }

    pub fn output_block(&self) -> Result<Tensor> {
        let start = (self.k + 1) * self.input_dim;
        self.m.slice_cols(start, start + self.output_dim())
    }
}

/// Blocks `M^{(j)} = C(A^{j+1} − A^j)B`, `M^{(x′)} = C(A − I)B − D`,
/// `M^{(x)} = CB + D`, `M^{(y)} = I`, ordered to match the window.
pub fn build_m_theta(params: &LdsParams, k: usize) -> Result<ArCoeffs> {
    if k == 0 {
        return Err(Error::Parameter("window length k must be at least 1".into()));
    }
    let (n, m) = (params.input_dim(), params.output_dim());
    let kernel = impulse_differences(params, k)?;
    let width = (k + 1) * n + m;
    let mut out = Tensor::zeros(&[m, width]);
    let mut put = |col: usize, block: &Tensor| {
        for r in 0..block.rows() {
            for c in 0..block.cols() {
                out.set2(r, col + c, block.get2(r, c));
            }
        }
    };
    for (j, block) in kernel.iter().enumerate().take(k).skip(1) {
        put((k - 1 - j) * n, block);
    }
    put((k - 1) * n, &kernel[0].sub(&params.d)?);
    put(k * n, &params.c.matmul(&params.b)?.add(&params.d)?);
    put((k + 1) * n, &Tensor::identity(m));
    Ok(ArCoeffs { m: out, k, input_dim: n })
}

/// Concatenates `x_{t−k}, …, x_t, y_{t−1}`.
pub fn ar_window(x: &Tensor, y: &Tensor, t: usize, k: usize) -> Result<Vec<f64>> {
    if t < k || t < 1 || t >= x.rows() || t > y.rows() {
        return Err(Error::Contract(format!("no window of length {k} ends at step {t}")));
    }
    let mut w = Vec::with_capacity((k + 1) * x.cols() + y.cols());
    for s in t - k..=t {
        w.extend_from_slice(x.row(s));
    }
    w.extend_from_slice(y.row(t - 1));
    Ok(w)
}

pub fn ar_predict(coeffs: &ArCoeffs, window: &[f64]) -> Result<Vec<f64>> {
    if window.len() != coeffs.window_len() {
        return Err(Error::Contract(format!(
            "window has {} entries, coefficients expect {}",
            window.len(),
            coeffs.window_len()
        )));
    }
    coeffs.m.matvec(window)
}

/// Largest deviation over `t ∈ [k, T)` between the truncated predictor
/// `M_Θ·X̃_t` and the exact predictor, for each window length in `ks`.
pub fn decay_curve(params: &LdsParams, rollout: &Rollout, ks: &[usize]) -> Result<Vec<f64>> {
    let len = rollout.x.rows();
    if let Some(&k) = ks.iter().find(|&&k| k == 0 || k >= len) {
        return Err(Error::Parameter(format!("window length {k} outside [1, {}]", len - 1)));
    }
    let kernel = impulse_differences(params, len)?;
    let exact: Vec<Vec<f64>> = (1..len)
        .map(|t| predictor_with(params, &kernel, &rollout.x, t, rollout.y.row(t - 1)))
        .collect::<Result<_>>()?;
    ks.iter()
        .map(|&k| {
            let coeffs = build_m_theta(params, k)?;
            let mut worst = 0.0f64;
            for t in k..len {
                let approx = ar_predict(&coeffs, &ar_window(&rollout.x, &rollout.y, t, k)?)?;
                let dev = approx
                    .iter()
                    .zip(&exact[t - 1])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                worst = worst.max(dev);
            }
            Ok(worst)
        })
        .collect()
}

/// `‖C‖_F·‖B‖_F·max_t ‖x_t‖`, the scale of every truncation bound.
pub fn tail_scale(params: &LdsParams, x: &Tensor) -> f64 {
    let xmax = (0..x.rows())
        .map(|t| x.row(t).iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    params.c.frobenius_norm() * params.b.frobenius_norm() * xmax
}

/// `c·γ^{k+2} / (1 − γ)` with `c` from [`tail_scale`].
pub fn decay_envelope(params: &LdsParams, x: &Tensor, k: usize) -> f64 {
    tail_scale(params, x) * params.gamma.powi(k as i32 + 2) / (1.0 - params.gamma)
}

/// `c·sqrt(Σ_{i=0}^{k} γⁱ)` with
/// `c² = (‖C‖‖B‖)² + 2(‖C‖‖B‖ + ‖D‖)² + m`.
pub fn m_theta_norm_bound(params: &LdsParams, k: usize) -> f64 {
    let cb = params.c.frobenius_norm() * params.b.frobenius_norm();
    let dn = params.d.frobenius_norm();
    let c2 = cb * cb + 2.0 * (cb + dn) * (cb + dn) + params.output_dim() as f64;
    let series: f64 = (0..=k).map(|i| params.gamma.powi(i as i32)).sum();
    (c2 * series).sqrt()
}

/// Least-squares slope of `ln(values)` against `ks`.
pub fn log_slope(ks: &[usize], values: &[f64]) -> f64 {
    let n = ks.len() as f64;
    let xs: Vec<f64> = ks.iter().map(|&k| k as f64).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lds::system::{rollout, sample_lds};

    #[test]
    fn b_and_d_zero_gives_persistence() {
        let mut p = sample_lds(0, 5, 2, 1, 0.9).unwrap();
        p.b = Tensor::zeros(&[5, 2]);
        p.d = Tensor::zeros(&[1, 2]);
        let x = Tensor::new(vec![4, 2], (0..8).map(|v| v as f64).collect()).unwrap();
        assert_eq!(lds_predictor(&p, &x, &[1.25]).unwrap(), vec![1.25]);
    }

    #[test]
    fn c_zero_leaves_input_difference() {
        let mut p = sample_lds(1, 5, 2, 1, 0.9).unwrap();
        p.c = Tensor::zeros(&[1, 5]);
        let x = Tensor::from_rows(&[vec![9.0, 9.0], vec![1.0, 2.0], vec![3.0, -1.0]]).unwrap();
        let expect = 0.5 + p.d.get2(0, 0) * 2.0 + p.d.get2(0, 1) * -3.0;
        assert!((lds_predictor(&p, &x, &[0.5]).unwrap()[0] - expect).abs() < 1e-14);
        assert!(lds_predictor(&p, &x.slice_rows(0, 1).unwrap(), &[0.0]).is_err());
    }

    #[test]
    fn noiseless_predictor_is_exact() {
        let mut p = sample_lds(2, 10, 3, 1, 0.95).unwrap();
        p.eta_std = 0.0;
        let r = rollout(&p, 120, 3, false).unwrap();
        let var = {
            let y = r.y.data();
            let m = y.iter().sum::<f64>() / y.len() as f64;
            y.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / y.len() as f64
        };
        let mut mse = 0.0;
        for t in 1..120 {
            let yhat = lds_predictor(&p, &r.x.slice_rows(0, t + 1).unwrap(), r.y.row(t - 1)).unwrap();
            mse += (yhat[0] - r.y.get2(t, 0)).powi(2) / 119.0;
        }
        assert!(mse < 1e-20 * var.max(1.0), "{mse} vs {var}");
    }

    #[test]
    fn m_theta_blocks() {
        let p = sample_lds(4, 6, 2, 1, 0.95).unwrap();
        let m = build_m_theta(&p, 5).unwrap();
        assert_eq!(m.m.shape(), &[1, 6 * 2 + 1]);
        assert_eq!(m.output_block().unwrap(), Tensor::identity(1));
        let cbd = p.c.matmul(&p.b).unwrap().add(&p.d).unwrap();
        assert_eq!(m.input_block(0).unwrap(), cbd);

        let mut z = p.clone();
        z.a = Tensor::zeros(&[6, 6]);
        let mz = build_m_theta(&z, 5).unwrap();
        for lag in 2..=5 {
            assert!(mz.input_block(lag).unwrap().max_abs() == 0.0);
        }
        let neg = mz.input_block(1).unwrap().add(&cbd).unwrap();
        assert!(neg.max_abs() < 1e-15);
    }

    #[test]
    fn persistence_coefficients_and_zero_window() {
        let m = ArCoeffs { m: Tensor::from_rows(&[vec![0.0, 0.0, 0.0, 0.0, 1.0]]).unwrap(), k: 1, input_dim: 2 };
        assert_eq!(ar_predict(&m, &[3.0, 1.0, -2.0, 5.0, 0.7]).unwrap(), vec![0.7]);
        let p = sample_lds(5, 4, 2, 1, 0.9).unwrap();
        let full = build_m_theta(&p, 3).unwrap();
        assert_eq!(ar_predict(&full, &[0.0; 9]).unwrap(), vec![0.0]);
        assert!(ar_predict(&full, &[0.0; 8]).is_err());
    }

    #[test]
    fn full_window_matches_exact_predictor() {
        let p = sample_lds(6, 8, 3, 1, 0.95).unwrap();
        let r = rollout(&p, 40, 7, false).unwrap();
        for t in 1..40 {
            let exact = lds_predictor(&p, &r.x.slice_rows(0, t + 1).unwrap(), r.y.row(t - 1)).unwrap();
            let m = build_m_theta(&p, t).unwrap();
            let approx = ar_predict(&m, &ar_window(&r.x, &r.y, t, t).unwrap()).unwrap();
            assert!((exact[0] - approx[0]).abs() < 1e-12);
        }
        let curve = decay_curve(&p, &r, &[39]).unwrap();
        assert!(curve[0] < 1e-12);
    }
}
