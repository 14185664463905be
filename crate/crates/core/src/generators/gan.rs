//! GAN with a pac critic: the discriminator scores groups of `pac` rows
//! concatenated into one input. Non-saturating generator loss.

use ndarray::{concatenate, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::{batches, collapsed_columns, Standardizer, TrainingHistory};
use crate::error::{Error, Result};
use crate::linalg::{select_rows, standard_normal, Matrix};
use crate::nn::{adam_update, Activation, AdamState, Gradients, Loss, NetworkParams};
use crate::scalar::Scalar;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GanConfig {
    pub noise_dim: usize,
    pub generator_hidden: Vec<usize>,
    pub discriminator_hidden: Vec<usize>,
    pub pac: usize,
    pub learning_rate: f64,
    /// Adam-style decay `g += wd·w`, applied as an L2 penalty of wd/2.
    pub weight_decay: f64,
    pub batch_size: usize,
    pub epochs: usize,
}

impl Default for GanConfig {
    fn default() -> Self {
        Self {
            noise_dim: 128,
            generator_hidden: vec![256, 256],
            discriminator_hidden: vec![256, 256],
            pac: 10,
            learning_rate: 2e-4,
            weight_decay: 1e-6,
            batch_size: 500,
            epochs: 300,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct GanModel<S: Scalar> {
    pub generator: NetworkParams<S>,
    pub discriminator: NetworkParams<S>,
    pub noise_dim: usize,
    pub pac: usize,
    pub dim: usize,
    pub standardizer: Standardizer<S>,
    pub history: TrainingHistory,
}

/// Groups consecutive runs of `pac` rows into single rows of width `pac·m`.
pub fn pack<S: Scalar>(x: &ArrayView2<S>, pac: usize) -> Result<Matrix<S>> {
    if pac == 0 || x.nrows() % pac != 0 {
        return Err(Error::Precondition(format!("{} rows do not split into packs of {pac}", x.nrows())));
    }
    let values: Vec<S> = x.iter().copied().collect();
    Array2::from_shape_vec((x.nrows() / pac, pac * x.ncols()), values).map_err(|e| Error::Dimension(e.to_string()))
}

fn unpack<S: Scalar>(x: &ArrayView2<S>, pac: usize) -> Result<Matrix<S>> {
    let values: Vec<S> = x.iter().copied().collect();
    Array2::from_shape_vec((x.nrows() * pac, x.ncols() / pac), values).map_err(|e| Error::Dimension(e.to_string()))
}

impl<S: Scalar> GanModel<S> {
    pub fn new(dim: usize, cfg: &GanConfig, standardizer: Standardizer<S>, rng: &mut seed::Rng) -> Result<Self> {
        if cfg.pac == 0 {
            return Err(Error::Config("pac size must be positive".into()));
        }
        let l2 = S::lit(cfg.weight_decay / 2.0);
        let generator = NetworkParams::mlp(cfg.noise_dim, &cfg.generator_hidden, dim, Activation::Relu, Activation::Linear, l2, rng)?;
        let discriminator = NetworkParams::mlp(cfg.pac * dim, &cfg.discriminator_hidden, 1, Activation::Relu, Activation::Sigmoid, l2, rng)?;
        Ok(Self {
            generator,
            discriminator,
            noise_dim: cfg.noise_dim,
            pac: cfg.pac,
            dim,
            standardizer,
            history: TrainingHistory::default(),
        })
    }

    /// Probability that each pack is real.
    pub fn discriminate(&self, rows: &ArrayView2<S>) -> Result<Vec<S>> {
        Ok(self.discriminator.forward(&pack(rows, self.pac)?.view())?.column(0).to_vec())
    }

    /// Mean cross-entropy of real packs labelled 1 and fake packs labelled 0,
    /// plus the L2 term, with discriminator gradients.
    pub fn discriminator_loss_and_gradients(&self, real: &ArrayView2<S>, fake: &ArrayView2<S>) -> Result<(S, Gradients<S>)> {
        let rp = pack(real, self.pac)?;
        let fp = pack(fake, self.pac)?;
        let packs = concatenate(Axis(0), &[rp.view(), fp.view()]).map_err(|e| Error::Dimension(e.to_string()))?;
        let targets = Array2::from_shape_fn((packs.nrows(), 1), |(i, _)| if i < rp.nrows() { S::one() } else { S::zero() });
        self.discriminator.gradients(&packs.view(), Loss::Bce(targets.view()))
    }

    /// `−mean log D(G(noise))` plus the generator L2 term, with generator gradients.
    pub fn generator_loss_and_gradients(&self, noise: &ArrayView2<S>) -> Result<(S, Gradients<S>)> {
        let cache = self.generator.forward_cached(noise)?;
        let packs = pack(&cache.output().view(), self.pac)?;
        let ones = Array2::from_elem((packs.nrows(), 1), S::one());
        let (d_loss, d_grads) = self.discriminator.gradients(&packs.view(), Loss::Bce(ones.view()))?;
        let g_fake = unpack(&d_grads.input.view(), self.pac)?;
        let mut grads = self.generator.backward(&cache, &g_fake.view());
        self.generator.add_l2_gradient(&mut grads);
        let value = d_loss - self.discriminator.l2_penalty() + self.generator.l2_penalty();
        Ok((value, grads))
    }

    fn generate_standardized(&self, count: usize, rng: &mut seed::Rng) -> Result<Matrix<S>> {
        let noise = standard_normal::<S>(count, self.noise_dim, rng);
        self.generator.forward(&noise.view())
    }

    pub fn sample(&self, count: usize, seed_value: u64) -> Result<Matrix<S>> {
        if count == 0 {
            return Ok(Matrix::zeros((0, self.dim)));
        }
        let x = self.generate_standardized(count, &mut seed::rng(seed_value))?;
        Ok(self.standardizer.invert(&x.view()))
    }
}

pub fn train_gan<S: Scalar>(data: &ArrayView2<S>, cfg: &GanConfig, seed_value: u64) -> Result<GanModel<S>> {
    if data.nrows() < cfg.pac.max(2) {
        return Err(Error::Precondition(format!("GAN needs at least {} rows for packs of {}", cfg.pac, cfg.pac)));
    }
    let mut rng = seed::rng(seed::derive_named(seed_value, "gan_init"));
    let standardizer = Standardizer::fit(data);
    let x = standardizer.apply(data);
    let mut model = GanModel::new(data.ncols(), cfg, standardizer, &mut rng)?;
    let mut g_adam = AdamState::new(&model.generator, S::lit(cfg.learning_rate));
    let mut d_adam = AdamState::new(&model.discriminator, S::lit(cfg.learning_rate));
    // Adam betas as in the usual GAN setting.
    for a in [&mut g_adam, &mut d_adam] {
        a.beta1 = S::lit(0.5);
        a.beta2 = S::lit(0.9);
    }
    let batch = (cfg.batch_size.min(x.nrows()) / cfg.pac).max(1) * cfg.pac;
    let mut history = TrainingHistory::default();
    let diverged = |epoch: usize, e: Error| match e {
        Error::Numeric { layer } => Error::TrainingDiverged {
            epoch,
            message: format!("non-finite GAN activation at layer {layer}"),
        },
        other => other,
    };
    for epoch in 1..=cfg.epochs {
        let (mut d_total, mut g_total, mut steps) = (0.0, 0.0, 0usize);
        for rows in batches(x.nrows(), batch, &mut rng) {
            let usable = rows.len() / cfg.pac * cfg.pac;
            if usable == 0 {
                continue;
            }
            let real = select_rows(&x.view(), &rows[..usable]);
            let fake = model.generate_standardized(usable, &mut rng).map_err(|e| diverged(epoch, e))?;
            let (d_loss, d_grads) = model.discriminator_loss_and_gradients(&real.view(), &fake.view()).map_err(|e| diverged(epoch, e))?;
            adam_update(&mut model.discriminator, &mut d_adam, &d_grads);
            let noise = standard_normal::<S>(usable, cfg.noise_dim, &mut rng);
            let (g_loss, g_grads) = model.generator_loss_and_gradients(&noise.view()).map_err(|e| diverged(epoch, e))?;
            adam_update(&mut model.generator, &mut g_adam, &g_grads);
            if !(d_loss.is_finite() && g_loss.is_finite()) {
                return Err(Error::TrainingDiverged {
                    epoch,
                    message: "GAN loss is not finite".into(),
                });
            }
            d_total += d_loss.as_f64();
            g_total += g_loss.as_f64();
            steps += 1;
        }
        let steps = steps.max(1) as f64;
        history.train_loss.push(g_total / steps);
        history.validation_loss.push(d_total / steps);
        history.learning_rate.push(cfg.learning_rate);
    }
    history.best_epoch = cfg.epochs;
    let check = model.generate_standardized(x.nrows(), &mut rng)?;
    let collapsed = collapsed_columns(&check.view(), &crate::linalg::column_stds(&x.view()));
    if !collapsed.is_empty() {
        let msg = format!("possible mode collapse: generated spread below 1% of data spread in columns {collapsed:?}");
        log::warn!("{msg}");
        history.warnings.push(msg);
    }
    model.history = history;
    Ok(model)
}
