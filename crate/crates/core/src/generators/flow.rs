//! Affine coupling flow with alternating masks and a standard-normal base.
//!
//! `f` maps data to the base space. Each layer keeps the masked coordinates
//! and transforms the rest as `x·exp(s) + t`, where `s = clamp·tanh(·)` and
//! `t` are computed from the kept coordinates.

use ndarray::{concatenate, s, Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::{batches, Standardizer, TrainingHistory};
use crate::error::{Error, Result};
use crate::linalg::{select_rows, standard_normal, Matrix};
use crate::nn::{adam_update, Activation, AdamState, ForwardCache, Gradients, NetworkParams};
use crate::scalar::Scalar;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowConfig {
    pub coupling_layers: usize,
    pub hidden: usize,
    pub scale_clamp: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub validation_fraction: f64,
    /// Epochs without validation gain before the learning rate is halved.
    pub plateau_patience: usize,
    pub min_learning_rate: f64,
    pub early_stop_patience: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            coupling_layers: 6,
            hidden: 512,
            scale_clamp: 1.0,
            learning_rate: 1e-5,
            batch_size: 128,
            max_epochs: 300,
            validation_fraction: 0.1,
            plateau_patience: 10,
            min_learning_rate: 1e-7,
            early_stop_patience: 25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct CouplingLayer<S: Scalar> {
    /// True for coordinates passed through unchanged.
    pub mask: Vec<bool>,
    pub scale_net: NetworkParams<S>,
    pub translate_net: NetworkParams<S>,
    pub scale_clamp: S,
}

struct LayerCache<S: Scalar> {
    x: Matrix<S>,
    scale: ForwardCache<S>,
    translate: ForwardCache<S>,
    tanh: Matrix<S>,
    exp_s: Matrix<S>,
}

impl<S: Scalar> CouplingLayer<S> {
    fn new(dim: usize, parity: usize, hidden: usize, clamp: S, rng: &mut seed::Rng) -> Result<Self> {
        let mask = (0..dim).map(|j| (j + parity) % 2 == 0).collect();
        let mut scale_net = NetworkParams::mlp(dim, &[hidden], dim, Activation::Relu, Activation::Linear, S::zero(), rng)?;
        let mut translate_net = NetworkParams::mlp(dim, &[hidden], dim, Activation::Relu, Activation::Linear, S::zero(), rng)?;
        // Start close to the identity map.
        scale_net.scale_output_layer(S::lit(0.01));
        translate_net.scale_output_layer(S::lit(0.01));
        Ok(Self {
            mask,
            scale_net,
            translate_net,
            scale_clamp: clamp,
        })
    }

    fn keep(&self) -> Array1<S> {
        self.mask.iter().map(|&m| if m { S::one() } else { S::zero() }).collect()
    }

    /// Log-scales and shifts, zero on the kept coordinates.
    fn conditioner(&self, x: &ArrayView2<S>) -> Result<(ForwardCache<S>, ForwardCache<S>, Matrix<S>, Matrix<S>, Matrix<S>)> {
        let keep = self.keep();
        let free = keep.mapv(|k| S::one() - k);
        let xm = x * &keep;
        let sc = self.scale_net.forward_cached(&xm.view())?;
        let tc = self.translate_net.forward_cached(&xm.view())?;
        let tanh = sc.output().mapv(|v| v.tanh());
        let log_scale = &tanh * self.scale_clamp * &free;
        let shift = tc.output() * &free;
        Ok((sc, tc, tanh, log_scale, shift))
    }

    fn forward(&self, x: &ArrayView2<S>) -> Result<(Matrix<S>, Array1<S>, LayerCache<S>)> {
        let (scale, translate, tanh, log_scale, shift) = self.conditioner(x)?;
        let exp_s = log_scale.mapv(|v| v.exp());
        let y = x * &exp_s + &shift;
        let logdet = log_scale.sum_axis(Axis(1));
        Ok((
            y,
            logdet,
            LayerCache {
                x: x.to_owned(),
                scale,
                translate,
                tanh,
                exp_s,
            },
        ))
    }

    fn inverse(&self, y: &ArrayView2<S>) -> Result<Matrix<S>> {
        // Kept coordinates of y equal those of x, so the conditioner is shared.
        let (_, _, _, log_scale, shift) = self.conditioner(y)?;
        Ok((y - &shift) * &log_scale.mapv(|v| (-v).exp()))
    }

    /// `gy` is dL/dy, `glogdet` is dL/d(logdet) per row.
    fn backward(&self, cache: &LayerCache<S>, gy: &Matrix<S>, glogdet: &Array1<S>) -> (Matrix<S>, Gradients<S>, Gradients<S>) {
        let keep = self.keep();
        let free = keep.mapv(|k| S::one() - k);
        let mut gx = gy * &cache.exp_s;
        let mut gs = gy * &cache.x * &cache.exp_s;
        for (mut row, &g) in gs.axis_iter_mut(Axis(0)).zip(glogdet) {
            row += g;
        }
        let gs = gs * &free;
        let gt = gy * &free;
        let clamp = self.scale_clamp;
        let gs_pre = &gs * &cache.tanh.mapv(|t| clamp * (S::one() - t * t));
        let sg = self.scale_net.backward(&cache.scale, &gs_pre.view());
        let tg = self.translate_net.backward(&cache.translate, &gt.view());
        gx = gx + (&sg.input + &tg.input) * &keep;
        (gx, sg, tg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct FlowModel<S: Scalar> {
    pub layers: Vec<CouplingLayer<S>>,
    /// Width of the data the flow was trained on.
    pub dim: usize,
    /// One-column data is paired with an auxiliary standard-normal column.
    pub augmented: bool,
    pub standardizer: Standardizer<S>,
    pub history: TrainingHistory,
}

fn log_normal_const<S: Scalar>(d: usize) -> S {
    S::lit(-0.5 * d as f64 * (2.0 * std::f64::consts::PI).ln())
}

impl<S: Scalar> FlowModel<S> {
    /// Untrained flow over `flow_dim` coordinates.
    pub fn new(dim: usize, cfg: &FlowConfig, standardizer: Standardizer<S>, rng: &mut seed::Rng) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Precondition("flow needs at least one column".into()));
        }
        let augmented = dim == 1;
        let flow_dim = dim.max(2);
        let layers = (0..cfg.coupling_layers)
            .map(|l| CouplingLayer::new(flow_dim, l % 2, cfg.hidden, S::lit(cfg.scale_clamp), rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            layers,
            dim,
            augmented,
            standardizer,
            history: TrainingHistory::default(),
        })
    }

    pub fn flow_dim(&self) -> usize {
        self.dim.max(2)
    }

    /// `f(x)` and log|det ∂f/∂x| per row, in the flow's working space.
    pub fn forward(&self, x: &ArrayView2<S>) -> Result<(Matrix<S>, Array1<S>)> {
        let mut h = x.to_owned();
        let mut logdet = Array1::zeros(x.nrows());
        for layer in &self.layers {
            let (y, ld, _) = layer.forward(&h.view())?;
            h = y;
            logdet += &ld;
        }
        Ok((h, logdet))
    }

    pub fn inverse(&self, z: &ArrayView2<S>) -> Result<Matrix<S>> {
        let mut h = z.to_owned();
        for layer in self.layers.iter().rev() {
            h = layer.inverse(&h.view())?;
        }
        Ok(h)
    }

    /// log p(x) = log N(f(x); 0, I) + log|det ∂f/∂x| per row, in working space.
    pub fn log_likelihood(&self, x: &ArrayView2<S>) -> Result<Array1<S>> {
        let (z, logdet) = self.forward(x)?;
        let c = log_normal_const::<S>(z.ncols());
        let half = S::lit(0.5);
        Ok(z.rows().into_iter().zip(&logdet).map(|(r, &ld)| c - half * r.dot(&r) + ld).collect())
    }

    /// Mean negative log-likelihood of a working-space batch and its
    /// gradients, as `(scale, translate)` pairs per layer.
    pub fn loss_and_gradients(&self, x: &ArrayView2<S>) -> Result<(S, Vec<(Gradients<S>, Gradients<S>)>)> {
        let n = S::from_usize_lossy(x.nrows().max(1));
        let mut h = x.to_owned();
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut logdet = Array1::<S>::zeros(x.nrows());
        for layer in &self.layers {
            let (y, ld, cache) = layer.forward(&h.view())?;
            logdet += &ld;
            caches.push(cache);
            h = y;
        }
        let c = log_normal_const::<S>(h.ncols());
        let half = S::lit(0.5);
        let ll: S = h.rows().into_iter().zip(&logdet).map(|(r, &ld)| c - half * r.dot(&r) + ld).sum();
        let loss = -ll / n;
        let mut g = h.mapv(|v| v / n);
        let glogdet = Array1::from_elem(x.nrows(), -S::one() / n);
        let mut grads = Vec::with_capacity(self.layers.len());
        for (layer, cache) in self.layers.iter().zip(&caches).rev() {
            let (gx, sg, tg) = layer.backward(cache, &g, &glogdet);
            grads.push((sg, tg));
            g = gx;
        }
        grads.reverse();
        Ok((loss, grads))
    }

    fn to_working(&self, x: &ArrayView2<S>, rng: &mut seed::Rng) -> Matrix<S> {
        let z = self.standardizer.apply(x);
        if self.augmented {
            let aux = standard_normal::<S>(z.nrows(), 1, rng);
            concatenate(Axis(1), &[z.view(), aux.view()]).expect("row counts match")
        } else {
            z
        }
    }

    pub fn sample(&self, count: usize, seed_value: u64) -> Result<Matrix<S>> {
        let mut rng = seed::rng(seed_value);
        let z = standard_normal::<S>(count, self.flow_dim(), &mut rng);
        if count == 0 {
            return Ok(Matrix::zeros((0, self.dim)));
        }
        let x = self.inverse(&z.view())?;
        let x = x.slice(s![.., ..self.dim]).to_owned();
        Ok(self.standardizer.invert(&x.view()))
    }
}

pub fn train_flow<S: Scalar>(data: &ArrayView2<S>, cfg: &FlowConfig, seed_value: u64) -> Result<FlowModel<S>> {
    if data.nrows() < 2 {
        return Err(Error::Precondition("flow needs at least two rows".into()));
    }
    let mut rng = seed::rng(seed::derive_named(seed_value, "flow_init"));
    let mut model = FlowModel::new(data.ncols(), cfg, Standardizer::fit(data), &mut rng)?;
    let mut data_rng = seed::rng(seed::derive_named(seed_value, "flow_data"));
    let (train_rows, val_rows) = crate::autoencoder::validation_split(data.nrows(), cfg.validation_fraction, seed::derive_named(seed_value, "flow_split"));
    let xt = select_rows(data, &train_rows);
    let xv = model.to_working(&select_rows(data, &val_rows).view(), &mut data_rng);
    let mut adams: Vec<(AdamState<S>, AdamState<S>)> = model
        .layers
        .iter()
        .map(|l| (AdamState::new(&l.scale_net, S::lit(cfg.learning_rate)), AdamState::new(&l.translate_net, S::lit(cfg.learning_rate))))
        .collect();
    let mut lr = cfg.learning_rate;
    let val_loss = |m: &FlowModel<S>| -> Result<f64> {
        if xv.nrows() == 0 {
            return Ok(f64::NAN);
        }
        Ok(-m.log_likelihood(&xv.view())?.mean().unwrap_or(S::zero()).as_f64())
    };
    let mut best = val_loss(&model)?;
    let mut best_layers = model.layers.clone();
    let (mut since_best, mut since_cut) = (0, 0);
    let mut history = TrainingHistory::default();
    for epoch in 1..=cfg.max_epochs {
        let xw = model.to_working(&xt.view(), &mut data_rng);
        let mut total = 0.0;
        for batch in batches(xw.nrows(), cfg.batch_size, &mut rng) {
            let xb = select_rows(&xw.view(), &batch);
            let (loss, grads) = model.loss_and_gradients(&xb.view()).map_err(|e| diverged(epoch, e))?;
            if !loss.is_finite() {
                return Err(Error::TrainingDiverged {
                    epoch,
                    message: "flow log-likelihood is not finite".into(),
                });
            }
            total += loss.as_f64() * batch.len() as f64;
            for ((layer, (sa, ta)), (sg, tg)) in model.layers.iter_mut().zip(adams.iter_mut()).zip(&grads) {
                adam_update(&mut layer.scale_net, sa, sg);
                adam_update(&mut layer.translate_net, ta, tg);
            }
        }
        let v = val_loss(&model)?;
        history.train_loss.push(total / xw.nrows() as f64);
        history.validation_loss.push(v);
        history.learning_rate.push(lr);
        if !v.is_finite() && xv.nrows() > 0 {
            return Err(Error::TrainingDiverged {
                epoch,
                message: "flow validation log-likelihood is not finite".into(),
            });
        }
        if v < best || xv.nrows() == 0 {
            best = v;
            best_layers = model.layers.clone();
            history.best_epoch = epoch;
            since_best = 0;
            since_cut = 0;
            continue;
        }
        since_best += 1;
        since_cut += 1;
        if since_best >= cfg.early_stop_patience {
            break;
        }
        if since_cut >= cfg.plateau_patience && lr > cfg.min_learning_rate {
            lr = (lr * 0.5).max(cfg.min_learning_rate);
            since_cut = 0;
            for (sa, ta) in &mut adams {
                sa.learning_rate = S::lit(lr);
                ta.learning_rate = S::lit(lr);
            }
        }
    }
    model.layers = best_layers;
    model.history = history;
    Ok(model)
}

fn diverged(epoch: usize, e: Error) -> Error {
    match e {
        Error::Numeric { layer } => Error::TrainingDiverged {
            epoch,
            message: format!("non-finite activation in coupling network layer {layer}"),
        },
        other => other,
    }
}

/// Numeric Jacobian of `f` at a single working-space point, by central differences.
pub fn numeric_jacobian<S: Scalar>(model: &FlowModel<S>, x: &[f64], h: f64) -> Result<Array2<f64>> {
    let d = x.len();
    let mut jac = Array2::zeros((d, d));
    for j in 0..d {
        let mut plus = x.to_vec();
        let mut minus = x.to_vec();
        plus[j] += h;
        minus[j] -= h;
        let p = Array2::from_shape_vec((1, d), plus.into_iter().map(S::lit).collect()).expect("shape");
        let m = Array2::from_shape_vec((1, d), minus.into_iter().map(S::lit).collect()).expect("shape");
        let fp = model.forward(&p.view())?.0;
        let fm = model.forward(&m.view())?.0;
        for i in 0..d {
            jac[[i, j]] = (fp[[0, i]].as_f64() - fm[[0, i]].as_f64()) / (2.0 * h);
        }
    }
    Ok(jac)
}
