//! Gaussian VAE: the encoder emits mean and log-variance, the decoder maps a
//! reparameterized latent back to a row. Loss per row is
//! `loss_factor·‖x − x̂‖² + KL(q(z|x) ‖ N(0, I))`.

use ndarray::{concatenate, s, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::{batches, Standardizer, TrainingHistory};
use crate::error::{Error, Result};
use crate::linalg::{select_rows, standard_normal, Matrix};
use crate::nn::{adam_update, Activation, AdamState, Gradients, NetworkParams};
use crate::scalar::Scalar;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VaeConfig {
    pub hidden: Vec<usize>,
    pub latent_dim: usize,
    pub loss_factor: f64,
    pub l2: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Add decoder noise with variance 1/(2·loss_factor) when sampling.
    pub sample_noise: bool,
}

impl Default for VaeConfig {
    fn default() -> Self {
        Self {
            hidden: vec![128, 128],
            latent_dim: 128,
            loss_factor: 2.0,
            l2: 1e-5,
            learning_rate: 1e-3,
            batch_size: 500,
            epochs: 300,
            sample_noise: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct VaeModel<S: Scalar> {
    /// Outputs `[mean, log-variance]`, each `latent_dim` wide.
    pub encoder: NetworkParams<S>,
    pub decoder: NetworkParams<S>,
    pub latent_dim: usize,
    pub dim: usize,
    pub loss_factor: S,
    pub sample_noise: bool,
    pub standardizer: Standardizer<S>,
    pub history: TrainingHistory,
}

/// Closed-form KL(N(μ, e^{lv}) ‖ N(0, 1)) for one latent unit.
pub fn gaussian_kl<S: Scalar>(mu: S, log_var: S) -> S {
    S::lit(0.5) * (mu * mu + log_var.exp() - S::one() - log_var)
}

#[derive(Debug, Clone)]
pub struct VaeLoss<S: Scalar> {
    /// Mean over rows of the weighted reconstruction plus KL, plus L2 terms.
    pub total: S,
    pub reconstruction: S,
    pub kl: S,
    pub encoder: Gradients<S>,
    pub decoder: Gradients<S>,
}

impl<S: Scalar> VaeModel<S> {
    pub fn new(dim: usize, cfg: &VaeConfig, standardizer: Standardizer<S>, rng: &mut seed::Rng) -> Result<Self> {
        let l2 = S::lit(cfg.l2);
        let encoder = NetworkParams::mlp(dim, &cfg.hidden, 2 * cfg.latent_dim, Activation::Relu, Activation::Linear, l2, rng)?;
        let rev: Vec<usize> = cfg.hidden.iter().rev().copied().collect();
        let decoder = NetworkParams::mlp(cfg.latent_dim, &rev, dim, Activation::Relu, Activation::Linear, l2, rng)?;
        Ok(Self {
            encoder,
            decoder,
            latent_dim: cfg.latent_dim,
            dim,
            loss_factor: S::lit(cfg.loss_factor),
            sample_noise: cfg.sample_noise,
            standardizer,
            history: TrainingHistory::default(),
        })
    }

    /// Loss and gradients on a standardized batch with fixed noise `eps`.
    pub fn loss_and_gradients(&self, x: &ArrayView2<S>, eps: &ArrayView2<S>) -> Result<VaeLoss<S>> {
        let q = self.latent_dim;
        if eps.dim() != (x.nrows(), q) {
            return Err(Error::Dimension(format!("noise shape {:?}, expected ({}, {q})", eps.dim(), x.nrows())));
        }
        let n = S::from_usize_lossy(x.nrows().max(1));
        let enc_cache = self.encoder.forward_cached(x)?;
        let out = enc_cache.output();
        let mu = out.slice(s![.., ..q]);
        let lv = out.slice(s![.., q..]);
        let std = lv.mapv(|v| (S::lit(0.5) * v).exp());
        let z = &mu + &(&std * eps);
        let dec_cache = self.decoder.forward_cached(&z.view())?;
        let diff = dec_cache.output() - x;
        let recon = diff.iter().map(|&d| d * d).sum::<S>() / n;
        let kl = mu.iter().zip(lv.iter()).map(|(&m, &l)| gaussian_kl(m, l)).sum::<S>() / n;
        let two_lf = S::lit(2.0) * self.loss_factor;
        let g_out = diff.mapv(|d| two_lf * d / n);
        let mut dec = self.decoder.backward(&dec_cache, &g_out.view());
        self.decoder.add_l2_gradient(&mut dec);
        let gz = &dec.input;
        let g_mu = gz + &mu.mapv(|m| m / n);
        let half = S::lit(0.5);
        let g_lv = gz * eps * &std * half + lv.mapv(|l| half * (l.exp() - S::one()) / n);
        let g_enc_out = concatenate(Axis(1), &[g_mu.view(), g_lv.view()]).map_err(|e| Error::Dimension(e.to_string()))?;
        let mut enc = self.encoder.backward(&enc_cache, &g_enc_out.view());
        self.encoder.add_l2_gradient(&mut enc);
        let total = self.loss_factor * recon + kl + self.encoder.l2_penalty() + self.decoder.l2_penalty();
        Ok(VaeLoss {
            total,
            reconstruction: recon,
            kl,
            encoder: enc,
            decoder: dec,
        })
    }

    pub fn sample(&self, count: usize, seed_value: u64) -> Result<Matrix<S>> {
        if count == 0 {
            return Ok(Matrix::zeros((0, self.dim)));
        }
        let mut rng = seed::rng(seed_value);
        let z = standard_normal::<S>(count, self.latent_dim, &mut rng);
        let mut x = self.decoder.forward(&z.view())?;
        if self.sample_noise {
            let sigma = (S::lit(2.0) * self.loss_factor).sqrt().recip();
            x = x + standard_normal::<S>(count, self.dim, &mut rng) * sigma;
        }
        Ok(self.standardizer.invert(&x.view()))
    }
}

pub fn train_vae<S: Scalar>(data: &ArrayView2<S>, cfg: &VaeConfig, seed_value: u64) -> Result<VaeModel<S>> {
    if data.nrows() < 2 {
        return Err(Error::Precondition("VAE needs at least two rows".into()));
    }
    let mut rng = seed::rng(seed::derive_named(seed_value, "vae_init"));
    let standardizer = Standardizer::fit(data);
    let x = standardizer.apply(data);
    let mut model = VaeModel::new(data.ncols(), cfg, standardizer, &mut rng)?;
    let mut enc_adam = AdamState::new(&model.encoder, S::lit(cfg.learning_rate));
    let mut dec_adam = AdamState::new(&model.decoder, S::lit(cfg.learning_rate));
    let mut history = TrainingHistory::default();
    for epoch in 1..=cfg.epochs {
        let mut total = 0.0;
        for batch in batches(x.nrows(), cfg.batch_size, &mut rng) {
            let xb = select_rows(&x.view(), &batch);
            let eps = standard_normal::<S>(batch.len(), cfg.latent_dim, &mut rng);
            let loss = model.loss_and_gradients(&xb.view(), &eps.view()).map_err(|e| match e {
                Error::Numeric { layer } => Error::TrainingDiverged {
                    epoch,
                    message: format!("non-finite VAE activation at layer {layer}"),
                },
                other => other,
            })?;
            if !loss.total.is_finite() {
                return Err(Error::TrainingDiverged {
                    epoch,
                    message: "VAE loss is not finite".into(),
                });
            }
            total += loss.total.as_f64() * batch.len() as f64;
            adam_update(&mut model.encoder, &mut enc_adam, &loss.encoder);
            adam_update(&mut model.decoder, &mut dec_adam, &loss.decoder);
        }
        history.train_loss.push(total / x.nrows() as f64);
        history.learning_rate.push(cfg.learning_rate);
    }
    history.best_epoch = history
        .train_loss
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map_or(0, |(i, _)| i + 1);
    model.history = history;
    Ok(model)
}
