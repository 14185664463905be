//! One-hidden-layer binary MLP classifier on the shared network engine.

use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::permutation;
use crate::nn::{adam_update, Activation, AdamState, Loss, NetworkParams};
use crate::scalar::Scalar;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub hidden: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub l2: f64,
    /// Stop after this many epochs without a training-loss gain of `tol`.
    pub patience: usize,
    pub tol: f64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            hidden: 50,
            learning_rate: 1e-3,
            batch_size: 200,
            max_epochs: 300,
            l2: 1e-5,
            patience: 10,
            tol: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct MlpClassifier<S: Scalar> {
    pub network: NetworkParams<S>,
    pub epochs_run: usize,
}

pub fn mlp_fit<S: Scalar>(x: &ArrayView2<S>, y: &[usize], cfg: &MlpConfig, seed_value: u64) -> Result<MlpClassifier<S>> {
    if x.nrows() != y.len() {
        return Err(Error::Dimension(format!("{} rows vs {} labels", x.nrows(), y.len())));
    }
    if !(y.contains(&0) && y.contains(&1)) || y.iter().any(|&c| c > 1) {
        return Err(Error::Precondition("MLP needs binary labels with both classes".into()));
    }
    let mut rng = seed::rng(seed_value);
    let mut net = NetworkParams::mlp(
        x.ncols(),
        &[cfg.hidden],
        1,
        Activation::Relu,
        Activation::Sigmoid,
        S::lit(cfg.l2),
        &mut rng,
    )?;
    let mut adam = AdamState::new(&net, S::lit(cfg.learning_rate));
    let targets = Array2::from_shape_fn((y.len(), 1), |(i, _)| if y[i] == 1 { S::one() } else { S::zero() });
    let n = y.len();
    let batch = cfg.batch_size.clamp(1, n);
    let (mut best, mut stale, mut epochs_run) = (f64::INFINITY, 0, 0);
    for _ in 0..cfg.max_epochs {
        epochs_run += 1;
        let order = permutation(n, &mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(batch) {
            let xb = x.select(Axis(0), chunk);
            let yb = targets.select(Axis(0), chunk);
            let (loss, grads) = net.gradients(&xb.view(), Loss::Bce(yb.view()))?;
            if !loss.is_finite() {
                return Err(Error::TrainingDiverged {
                    epoch: epochs_run,
                    message: "MLP classifier loss is not finite".into(),
                });
            }
            adam_update(&mut net, &mut adam, &grads);
            epoch_loss += loss.as_f64() * chunk.len() as f64;
        }
        epoch_loss /= n as f64;
        if epoch_loss < best - cfg.tol {
            best = epoch_loss;
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                break;
            }
        }
    }
    Ok(MlpClassifier { network: net, epochs_run })
}

impl<S: Scalar> MlpClassifier<S> {
    pub fn predict_proba(&self, x: &ArrayView2<S>) -> Result<Vec<f64>> {
        Ok(self.network.forward(x)?.column(0).iter().map(|v| v.as_f64()).collect())
    }

    pub fn predict(&self, x: &ArrayView2<S>) -> Result<Vec<usize>> {
        Ok(self.predict_proba(x)?.into_iter().map(|p| usize::from(p >= 0.5)).collect())
    }
}
