//! Undercomplete autoencoder for dimensionality reduction, with a width
//! sweep per latent size and the information records used to choose `m`.

use std::path::Path;

use ndarray::{Array1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::data::ScalingParams;
use crate::error::{Error, Result};
use crate::info;
use crate::linalg::{permutation, select_rows, Matrix};
use crate::nn::{adam_update, Activation, AdamState, LayerSpec, Loss, NetworkParams};
use crate::scalar::Scalar;
use crate::seed;

pub const WIDTH_CHOICES: [usize; 4] = [64, 128, 192, 256];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AutoencoderConfig {
    pub max_epochs: usize,
    pub patience: usize,
    pub l2: f64,
    pub learning_rate: f64,
    pub validation_fraction: f64,
    /// Significance level of the paired t-test used to prefer smaller widths.
    pub alpha: f64,
}

impl Default for AutoencoderConfig {
    fn default() -> Self {
        Self {
            max_epochs: 500,
            patience: 10,
            l2: 1e-4,
            learning_rate: 1e-3,
            validation_fraction: 0.2,
            alpha: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct AutoencoderModel<S: Scalar> {
    pub encoder: NetworkParams<S>,
    pub decoder: NetworkParams<S>,
    pub latent_dim: usize,
    pub input_dim: usize,
    pub widths: (usize, usize),
    /// Maps original units to the scaled space the networks were trained in.
    pub scaling: ScalingParams<S>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingRecord {
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub train_loss: Vec<f64>,
    pub validation_mse: Vec<f64>,
    pub best_validation_mse: f64,
    pub untrained_validation_mse: f64,
    pub train_rows: Vec<usize>,
    pub validation_rows: Vec<usize>,
    /// Mean squared error of each validation row under the kept parameters.
    pub validation_row_errors: Vec<f64>,
}

/// Root of the mean squared difference over every element.
pub fn rmse<S: Scalar>(a: &ArrayView2<S>, b: &ArrayView2<S>) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::Dimension(format!("{:?} vs {:?}", a.dim(), b.dim())));
    }
    if a.is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = a.iter().zip(b.iter()).map(|(x, y)| (x.as_f64() - y.as_f64()).powi(2)).sum();
    Ok((sum / a.len() as f64).sqrt())
}

fn row_errors<S: Scalar>(a: &ArrayView2<S>, b: &ArrayView2<S>) -> Vec<f64> {
    a.rows()
        .into_iter()
        .zip(b.rows())
        .map(|(x, y)| x.iter().zip(y.iter()).map(|(p, q)| (p.as_f64() - q.as_f64()).powi(2)).sum::<f64>() / x.len().max(1) as f64)
        .collect()
}

fn build_network<S: Scalar>(n: usize, m: usize, widths: (usize, usize), l2: f64, rng: &mut seed::Rng) -> Result<NetworkParams<S>> {
    let (w1, w2) = widths;
    let layers = vec![
        LayerSpec::new(n, w1, Activation::Relu),
        LayerSpec::new(w1, w2, Activation::Relu),
        LayerSpec::new(w2, m, Activation::Linear),
        LayerSpec::new(m, w2, Activation::Relu),
        LayerSpec::new(w2, w1, Activation::Relu),
        LayerSpec::new(w1, n, Activation::Linear),
    ];
    NetworkParams::new(layers, S::lit(l2), rng)
}

fn split_network<S: Scalar>(net: &NetworkParams<S>) -> Result<(NetworkParams<S>, NetworkParams<S>)> {
    let part = |r: std::ops::Range<usize>| {
        NetworkParams::from_parts(
            net.layers()[r.clone()].to_vec(),
            net.weights()[r.clone()].to_vec(),
            net.biases()[r].to_vec(),
            net.l2_lambda(),
        )
    };
    Ok((part(0..3)?, part(3..6)?))
}

/// Seeded train/validation row split.
pub fn validation_split(n: usize, fraction: f64, seed_value: u64) -> (Vec<usize>, Vec<usize>) {
    let order = permutation(n, &mut seed::rng(seed_value));
    let n_val = if n < 2 { 0 } else { ((n as f64 * fraction).round() as usize).clamp(1, n - 1) };
    let mut val = order[..n_val].to_vec();
    let mut train = order[n_val..].to_vec();
    val.sort_unstable();
    train.sort_unstable();
    (train, val)
}

/// Trains on already-scaled `data` with full-batch Adam and MSE, keeping
/// the parameters of the best validation epoch.
pub fn train_autoencoder<S: Scalar>(
    data: &ArrayView2<S>,
    m: usize,
    widths: (usize, usize),
    seed_value: u64,
    cfg: &AutoencoderConfig,
) -> Result<(AutoencoderModel<S>, TrainingRecord)> {
    let n = data.ncols();
    if m == 0 || m >= n {
        return Err(Error::Precondition(format!("latent size must satisfy 0 < m < n, got m={m}, n={n}")));
    }
    if data.nrows() < 2 {
        return Err(Error::Precondition("autoencoder needs at least two rows".into()));
    }
    let (train_rows, val_rows) = validation_split(data.nrows(), cfg.validation_fraction, seed::derive(seed_value, &[0]));
    let xt = select_rows(data, &train_rows);
    let xv = select_rows(data, &val_rows);
    let mut rng = seed::rng(seed::derive(seed_value, &[1]));
    let mut net = build_network::<S>(n, m, widths, cfg.l2, &mut rng)?;
    let mut adam = AdamState::new(&net, S::lit(cfg.learning_rate));
    let val_mse = |net: &NetworkParams<S>| -> Result<f64> { Ok(rmse(&net.forward(&xv.view())?.view(), &xv.view())?.powi(2)) };
    let untrained = val_mse(&net)?;
    let (mut best, mut best_epoch, mut best_net) = (untrained, 0, net.clone());
    let (mut train_loss, mut validation_mse) = (Vec::new(), Vec::new());
    let mut stale = 0;
    for epoch in 1..=cfg.max_epochs {
        let (loss, grads) = net.gradients(&xt.view(), Loss::Mse(xt.view()))?;
        if !loss.is_finite() {
            return Err(Error::TrainingDiverged {
                epoch,
                message: "autoencoder reconstruction loss is not finite".into(),
            });
        }
        adam_update(&mut net, &mut adam, &grads);
        let v = val_mse(&net)?;
        train_loss.push(loss.as_f64());
        validation_mse.push(v);
        if v < best {
            best = v;
            best_epoch = epoch;
            best_net = net.clone();
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                break;
            }
        }
    }
    let validation_row_errors = row_errors(&best_net.forward(&xv.view())?.view(), &xv.view());
    let (encoder, decoder) = split_network(&best_net)?;
    let record = TrainingRecord {
        epochs_run: train_loss.len(),
        best_epoch,
        train_loss,
        validation_mse,
        best_validation_mse: best,
        untrained_validation_mse: untrained,
        train_rows,
        validation_rows: val_rows,
        validation_row_errors,
    };
    let model = AutoencoderModel {
        encoder,
        decoder,
        latent_dim: m,
        input_dim: n,
        widths,
        scaling: ScalingParams::identity(n),
    };
    Ok((model, record))
}

impl<S: Scalar> AutoencoderModel<S> {
    pub fn with_scaling(mut self, scaling: ScalingParams<S>) -> Result<Self> {
        if scaling.dim() != self.input_dim {
            return Err(Error::Dimension(format!("scaling has {} columns, model {}", scaling.dim(), self.input_dim)));
        }
        self.scaling = scaling;
        Ok(self)
    }

    /// Rows in original units to latent codes.
    pub fn encode(&self, rows: &ArrayView2<S>) -> Result<Matrix<S>> {
        if rows.ncols() != self.input_dim {
            return Err(Error::Dimension(format!("model expects {} columns, got {}", self.input_dim, rows.ncols())));
        }
        if rows.nrows() == 0 {
            return Ok(Matrix::zeros((0, self.latent_dim)));
        }
        self.encoder.forward(&self.scaling.apply(rows)?.view())
    }

    /// Latent codes to rows in original units.
    pub fn decode(&self, latents: &ArrayView2<S>) -> Result<Matrix<S>> {
        if latents.ncols() != self.latent_dim {
            return Err(Error::Dimension(format!("model expects {} latent columns, got {}", self.latent_dim, latents.ncols())));
        }
        if latents.nrows() == 0 {
            return Ok(Matrix::zeros((0, self.input_dim)));
        }
        self.scaling.invert(&self.decoder.forward(latents)?.view())
    }

    pub fn parameter_count(&self) -> usize {
        self.encoder.parameter_count() + self.decoder.parameter_count()
    }

    /// Writes `<stem>.encoder.json` and `<stem>.decoder.json` plus the full model.
    pub fn save(&self, dir: impl AsRef<Path>, stem: &str) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(format!("{stem}.encoder.json")), serde_json::to_vec_pretty(&self.encoder)?)?;
        std::fs::write(dir.join(format!("{stem}.decoder.json")), serde_json::to_vec_pretty(&self.decoder)?)?;
        std::fs::write(dir.join(format!("{stem}.json")), serde_json::to_vec_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_slice(&std::fs::read(path)?)?)
    }
}

/// Two-sided paired t-test p-value; 1 when the differences are all equal to zero.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!("{} vs {} paired values", a.len(), b.len())));
    }
    let n = a.len();
    if n < 2 {
        return Ok(1.0);
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = d.iter().sum::<f64>() / n as f64;
    let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    if var == 0.0 {
        return Ok(if mean == 0.0 { 1.0 } else { 0.0 });
    }
    let t = mean / (var / n as f64).sqrt();
    let dist = StudentsT::new(0.0, 1.0, (n - 1) as f64).map_err(|e| Error::Undefined(e.to_string()))?;
    Ok(2.0 * (1.0 - dist.cdf(t.abs())))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WidthCandidate {
    pub widths: (usize, usize),
    pub validation_mse: f64,
    pub parameter_count: usize,
    /// Paired t-test against the lowest-MSE candidate.
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub latent_dim: usize,
    pub rmse: f64,
    pub latent_entropy: f64,
    pub mutual_info: f64,
    pub info_loss: f64,
    pub best_width: (usize, usize),
    pub candidates: Vec<WidthCandidate>,
}

/// Among candidates not significantly worse than the lowest-MSE one, the
/// index with the fewest parameters (then lowest MSE).
pub fn select_width(candidates: &[WidthCandidate], alpha: f64) -> Option<usize> {
    candidates
        .iter()
        .enumerate()
        .filter(|(_, c)| c.p_value >= alpha)
        .min_by(|(_, a), (_, b)| {
            a.parameter_count
                .cmp(&b.parameter_count)
                .then(a.validation_mse.total_cmp(&b.validation_mse))
        })
        .map(|(i, _)| i)
}

pub struct SweepOutput<S: Scalar> {
    pub results: Vec<SweepResult>,
    pub models: Vec<AutoencoderModel<S>>,
    pub input_entropy: f64,
}

/// Trains every width pair for each latent size in `m_values` on scaled
/// `data` and records the chosen model's metrics.
pub fn sweep<S: Scalar>(data: &ArrayView2<S>, m_values: &[usize], seed_value: u64, cfg: &AutoencoderConfig) -> Result<SweepOutput<S>> {
    sweep_with_widths(data, m_values, &WIDTH_CHOICES, seed_value, cfg)
}

pub fn sweep_with_widths<S: Scalar>(
    data: &ArrayView2<S>,
    m_values: &[usize],
    width_choices: &[usize],
    seed_value: u64,
    cfg: &AutoencoderConfig,
) -> Result<SweepOutput<S>> {
    if m_values.is_empty() || width_choices.is_empty() {
        return Err(Error::Precondition("sweep needs at least one latent size and one width".into()));
    }
    let hx = info::entropy(data, seed::derive_named(seed_value, "input_entropy"))?;
    let mut results = Vec::new();
    let mut models = Vec::new();
    for &m in m_values {
        let mut trained = Vec::new();
        for &w1 in width_choices {
            for &w2 in width_choices {
                let s = seed::derive(seed_value, &[m as u64, w1 as u64, w2 as u64]);
                trained.push(train_autoencoder(data, m, (w1, w2), s, cfg)?);
            }
        }
        let best = trained
            .iter()
            .enumerate()
            .min_by(|a, b| a.1 .1.best_validation_mse.total_cmp(&b.1 .1.best_validation_mse))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let mut candidates = Vec::with_capacity(trained.len());
        for (model, rec) in &trained {
            candidates.push(WidthCandidate {
                widths: model.widths,
                validation_mse: rec.best_validation_mse,
                parameter_count: model.parameter_count(),
                p_value: paired_t_test(&rec.validation_row_errors, &trained[best].1.validation_row_errors)?,
            });
        }
        let chosen = select_width(&candidates, cfg.alpha).unwrap_or(best);
        let (model, rec) = trained.swap_remove(chosen);
        let xv = select_rows(data, &rec.validation_rows);
        let z = model.encoder.forward(&xv.view())?;
        let hz = info::entropy(&z.view(), seed::derive(seed_value, &[m as u64, 1]))?;
        let mi = info::mutual_info(&xv.view(), &z.view(), seed::derive(seed_value, &[m as u64, 2]))?;
        results.push(SweepResult {
            latent_dim: m,
            rmse: rec.best_validation_mse.sqrt(),
            latent_entropy: hz.value.as_f64(),
            mutual_info: mi.as_f64(),
            info_loss: info::info_loss(&hx, &hz).as_f64(),
            best_width: model.widths,
            candidates,
        });
        models.push(model);
    }
    Ok(SweepOutput {
        results,
        models,
        input_entropy: hx.value.as_f64(),
    })
}

/// Mean of per-row RMSE values, used to compare reconstructions.
pub fn mean_row_rmse<S: Scalar>(a: &ArrayView2<S>, b: &ArrayView2<S>) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::Dimension(format!("{:?} vs {:?}", a.dim(), b.dim())));
    }
    let per_row: Array1<f64> = row_errors(a, b).into_iter().map(f64::sqrt).collect();
    Ok(per_row.mean().unwrap_or(0.0))
}

/// Sweep rows as the decision matrix `[m, rmse, mutual_info, info_loss]`.
pub fn decision_matrix(results: &[SweepResult]) -> Matrix<f64> {
    let mut out = Matrix::zeros((results.len(), 4));
    for (mut row, r) in out.axis_iter_mut(Axis(0)).zip(results) {
        row[0] = r.latent_dim as f64;
        row[1] = r.rmse;
        row[2] = r.mutual_info;
        row[3] = r.info_loss;
    }
    out
}
