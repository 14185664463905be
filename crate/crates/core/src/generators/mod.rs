//! Deep generative models trained on latent rows: an affine coupling flow,
//! a VAE and a pac-critic GAN, behind one sampling interface.
//!
//! Every model standardizes its training data internally (zero mean, unit
//! variance per column) and maps samples back to the input units.

pub mod flow;
pub mod gan;
pub mod vae;

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{column_means, column_stds, permutation, Matrix};
use crate::scalar::Scalar;
use crate::seed;

pub use flow::{train_flow, CouplingLayer, FlowConfig, FlowModel};
pub use gan::{train_gan, GanConfig, GanModel};
pub use vae::{train_vae, VaeConfig, VaeModel};

/// Per-column affine map to zero mean and unit variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Standardizer<S: Scalar> {
    pub mean: Array1<S>,
    pub std: Array1<S>,
}

impl<S: Scalar> Standardizer<S> {
    pub fn fit(x: &ArrayView2<S>) -> Self {
        let mean = column_means(x);
        let std = column_stds(x).mapv(|s| if s > S::lit(1e-12) && s.is_finite() { s } else { S::one() });
        Self { mean, std }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mean: Array1::zeros(dim),
            std: Array1::ones(dim),
        }
    }

    pub fn apply(&self, x: &ArrayView2<S>) -> Matrix<S> {
        (x - &self.mean) / &self.std
    }

    pub fn invert(&self, x: &ArrayView2<S>) -> Matrix<S> {
        x * &self.std + &self.mean
    }
}

/// Per-epoch loss values of a training run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingHistory {
    pub train_loss: Vec<f64>,
    pub validation_loss: Vec<f64>,
    pub learning_rate: Vec<f64>,
    pub best_epoch: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorKind {
    Flow,
    Vae,
    Gan,
}

impl GeneratorKind {
    pub const ALL: [GeneratorKind; 3] = [GeneratorKind::Flow, GeneratorKind::Vae, GeneratorKind::Gan];

    pub fn name(self) -> &'static str {
        match self {
            GeneratorKind::Flow => "flow",
            GeneratorKind::Vae => "vae",
            GeneratorKind::Gan => "gan",
        }
    }
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GeneratorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "flow" | "realnvp" | "real_nvp" => Ok(GeneratorKind::Flow),
            "vae" | "tvae" => Ok(GeneratorKind::Vae),
            "gan" | "ctgan" => Ok(GeneratorKind::Gan),
            other => Err(Error::Config(format!("unknown generator `{other}` (expected flow, vae or gan)"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub flow: FlowConfig,
    pub vae: VaeConfig,
    pub gan: GanConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "lowercase", bound = "")]
pub enum GeneratorModel<S: Scalar> {
    Flow(FlowModel<S>),
    Vae(VaeModel<S>),
    Gan(GanModel<S>),
}

impl<S: Scalar> GeneratorModel<S> {
    pub fn kind(&self) -> GeneratorKind {
        match self {
            GeneratorModel::Flow(_) => GeneratorKind::Flow,
            GeneratorModel::Vae(_) => GeneratorKind::Vae,
            GeneratorModel::Gan(_) => GeneratorKind::Gan,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            GeneratorModel::Flow(m) => m.dim,
            GeneratorModel::Vae(m) => m.dim,
            GeneratorModel::Gan(m) => m.dim,
        }
    }

    pub fn history(&self) -> &TrainingHistory {
        match self {
            GeneratorModel::Flow(m) => &m.history,
            GeneratorModel::Vae(m) => &m.history,
            GeneratorModel::Gan(m) => &m.history,
        }
    }

    /// `count` rows in the units of the training data, deterministic in `seed`.
    pub fn sample(&self, count: usize, seed_value: u64) -> Result<Matrix<S>> {
        let out = match self {
            GeneratorModel::Flow(m) => m.sample(count, seed_value)?,
            GeneratorModel::Vae(m) => m.sample(count, seed_value)?,
            GeneratorModel::Gan(m) => m.sample(count, seed_value)?,
        };
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric { layer: 0 });
        }
        Ok(out)
    }
}

pub fn train_generator<S: Scalar>(kind: GeneratorKind, data: &ArrayView2<S>, cfg: &GeneratorConfig, seed_value: u64) -> Result<GeneratorModel<S>> {
    if data.nrows() < 2 || data.ncols() == 0 {
        return Err(Error::Precondition(format!("{kind} needs at least two rows and one column")));
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::Precondition(format!("{kind} training data holds non-finite values")));
    }
    Ok(match kind {
        GeneratorKind::Flow => GeneratorModel::Flow(train_flow(data, &cfg.flow, seed_value)?),
        GeneratorKind::Vae => GeneratorModel::Vae(train_vae(data, &cfg.vae, seed_value)?),
        GeneratorKind::Gan => GeneratorModel::Gan(train_gan(data, &cfg.gan, seed_value)?),
    })
}

/// Shuffled mini-batches of row indices.
pub(crate) fn batches(n: usize, batch: usize, rng: &mut seed::Rng) -> Vec<Vec<usize>> {
    let order = permutation(n, rng);
    order.chunks(batch.clamp(1, n.max(1))).map(<[usize]>::to_vec).collect()
}

/// Columns whose sample spread is below 1% of the data spread.
pub(crate) fn collapsed_columns<S: Scalar>(samples: &ArrayView2<S>, data_std: &Array1<S>) -> Vec<usize> {
    let s = column_stds(samples);
    (0..s.len()).filter(|&j| s[j] < S::lit(0.01) * data_std[j]).collect()
}
