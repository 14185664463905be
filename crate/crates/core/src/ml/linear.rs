//! Linear classifiers: logistic regression and a hinge-loss SVM.

use ndarray::{Array1, ArrayView2};
use serde::{Deserialize, Serialize};

use super::forest::balanced_weights;
use crate::error::{Error, Result};
use crate::nn::sigmoid;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearModel {
    pub fn decision<S: Scalar>(&self, x: &ArrayView2<S>) -> Vec<f64> {
        x.rows()
            .into_iter()
            .map(|r| r.iter().zip(&self.weights).map(|(v, w)| v.as_f64() * w).sum::<f64>() + self.bias)
            .collect()
    }

    /// Logistic probability of class 1.
    pub fn predict_proba<S: Scalar>(&self, x: &ArrayView2<S>) -> Vec<f64> {
        self.decision(x).into_iter().map(sigmoid).collect()
    }

    pub fn predict<S: Scalar>(&self, x: &ArrayView2<S>) -> Vec<usize> {
        self.decision(x).into_iter().map(|d| usize::from(d >= 0.0)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticConfig {
    pub max_iter: usize,
    /// Inverse L2 strength, as in `C Σ loss + ½‖w‖²`.
    pub c: f64,
    pub balanced: bool,
    pub grad_tol: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self {
            max_iter: 300,
            c: 1.0,
            balanced: false,
            grad_tol: 1e-6,
        }
    }
}

fn to_f64<S: Scalar>(x: &ArrayView2<S>) -> ndarray::Array2<f64> {
    x.mapv(|v| v.as_f64())
}

fn check_binary(n_rows: usize, y: &[usize]) -> Result<()> {
    if n_rows != y.len() {
        return Err(Error::Dimension(format!("{n_rows} rows vs {} labels", y.len())));
    }
    if y.iter().any(|&c| c > 1) {
        return Err(Error::Precondition("binary labels must be 0 or 1".into()));
    }
    if !(y.contains(&0) && y.contains(&1)) {
        return Err(Error::Precondition("training labels hold a single class".into()));
    }
    Ok(())
}

/// Mean weighted log-loss plus ‖w‖²/(2·C·N), and its gradient.
fn logistic_objective(x: &ndarray::Array2<f64>, y: &[f64], sw: &[f64], w: &Array1<f64>, b: f64, c: f64) -> (f64, Array1<f64>, f64) {
    let n = x.nrows() as f64;
    let z = x.dot(w) + b;
    let mut loss = 0.0;
    let mut resid = Array1::zeros(x.nrows());
    for i in 0..x.nrows() {
        // log(1 + e^z) − y z, computed stably.
        let zi = z[i];
        let softplus = if zi > 0.0 { zi + (-zi).exp().ln_1p() } else { zi.exp().ln_1p() };
        loss += sw[i] * (softplus - y[i] * zi);
        resid[i] = sw[i] * (sigmoid(zi) - y[i]);
    }
    let reg = 1.0 / (c * n);
    let value = loss / n + 0.5 * reg * w.dot(w);
    let gw = x.t().dot(&resid) / n + w * reg;
    let gb = resid.sum() / n;
    (value, gw, gb)
}

/// Gradient descent with Armijo backtracking.
pub fn logistic_fit<S: Scalar>(x: &ArrayView2<S>, y: &[usize], cfg: &LogisticConfig) -> Result<LinearModel> {
    check_binary(x.nrows(), y)?;
    let xf = to_f64(x);
    let yf: Vec<f64> = y.iter().map(|&c| c as f64).collect();
    let sw: Vec<f64> = if cfg.balanced {
        let cw = balanced_weights(y, 2);
        y.iter().map(|&c| cw[c]).collect()
    } else {
        vec![1.0; y.len()]
    };
    let mut w = Array1::zeros(xf.ncols());
    let mut b = 0.0;
    let mut step = 1.0;
    let (mut value, mut gw, mut gb) = logistic_objective(&xf, &yf, &sw, &w, b, cfg.c);
    for _ in 0..cfg.max_iter {
        let gnorm2 = gw.dot(&gw) + gb * gb;
        if gnorm2.sqrt() < cfg.grad_tol {
            break;
        }
        step *= 2.0;
        loop {
            let w_new = &w - &(&gw * step);
            let b_new = b - step * gb;
            let (v_new, gw_new, gb_new) = logistic_objective(&xf, &yf, &sw, &w_new, b_new, cfg.c);
            if v_new <= value - 0.5 * step * gnorm2 || step < 1e-12 {
                w = w_new;
                b = b_new;
                value = v_new;
                gw = gw_new;
                gb = gb_new;
                break;
            }
            step *= 0.5;
        }
    }
    Ok(LinearModel { weights: w.to_vec(), bias: b })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    pub epochs: usize,
    /// Inverse regularisation, as in `½‖w‖² + C Σ hinge`.
    pub c: f64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self { epochs: 500, c: 1.0 }
    }
}

/// Linear SVM by full-batch Pegasos subgradient steps on
/// `λ/2 ‖w‖² + mean hinge`, λ = 1/(C·N), with iterate averaging.
pub fn svm_fit<S: Scalar>(x: &ArrayView2<S>, y: &[usize], cfg: &SvmConfig) -> Result<LinearModel> {
    check_binary(x.nrows(), y)?;
    let xf = to_f64(x);
    let n = xf.nrows() as f64;
    let lambda = 1.0 / (cfg.c * n);
    let ys: Array1<f64> = y.iter().map(|&c| if c == 1 { 1.0 } else { -1.0 }).collect();
    let mut w: Array1<f64> = Array1::zeros(xf.ncols());
    let mut b = 0.0;
    let (mut w_avg, mut b_avg, mut averaged) = (Array1::<f64>::zeros(xf.ncols()), 0.0, 0.0);
    let radius = 1.0 / lambda.sqrt();
    for t in 1..=cfg.epochs.max(1) {
        let eta = 1.0 / (lambda * t as f64);
        let margin = (xf.dot(&w) + b) * &ys;
        let active: Array1<f64> = margin.mapv(|m| if m < 1.0 { 1.0 } else { 0.0 }) * &ys;
        let gw = &w * lambda - &(xf.t().dot(&active) / n);
        let gb = -active.sum() / n;
        w = &w - &(gw * eta);
        b -= eta * gb;
        let norm = w.dot(&w).sqrt();
        if norm > radius {
            w *= radius / norm;
        }
        if t * 2 > cfg.epochs {
            w_avg += &w;
            b_avg += b;
            averaged += 1.0;
        }
    }
    if averaged > 0.0 {
        w = w_avg / averaged;
        b = b_avg / averaged;
    }
    Ok(LinearModel { weights: w.to_vec(), bias: b })
}
