use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;
use crate::seed::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
    Linear,
    Sigmoid,
}

impl Activation {
    #[inline]
    pub fn apply<S: Scalar>(self, x: S) -> S {
        match self {
            Activation::Relu => {
                if x > S::zero() || x.is_nan() {
                    x
                } else {
                    S::zero()
                }
            }
            Activation::Tanh => x.tanh(),
            Activation::Linear => x,
            Activation::Sigmoid => sigmoid(x),
        }
    }

    /// Derivative expressed through the activation output `y`.
    #[inline]
    fn derivative_from_output<S: Scalar>(self, y: S) -> S {
        match self {
            Activation::Relu => {
                if y > S::zero() {
                    S::one()
                } else {
                    S::zero()
                }
            }
            Activation::Tanh => S::one() - y * y,
            Activation::Linear => S::one(),
            Activation::Sigmoid => y * (S::one() - y),
        }
    }
}

#[inline]
pub fn sigmoid<S: Scalar>(x: S) -> S {
    if x >= S::zero() {
        S::one() / (S::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (S::one() + e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub input_width: usize,
    pub output_width: usize,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn new(input_width: usize, output_width: usize, activation: Activation) -> Self {
        Self {
            input_width,
            output_width,
            activation,
        }
    }
}

/// Weights and biases of a chain of dense layers.
///
/// Weight matrix `i` has shape `[output_width × input_width]`, so a layer
/// maps a batch `X` to `act(X Wᵀ + b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct NetworkParams<S: Scalar> {
    layers: Vec<LayerSpec>,
    weights: Vec<Array2<S>>,
    biases: Vec<Array1<S>>,
    l2_lambda: S,
}

/// Parameter-shaped gradients plus the gradient with respect to the input batch.
#[derive(Debug, Clone)]
pub struct Gradients<S: Scalar> {
    pub weights: Vec<Array2<S>>,
    pub biases: Vec<Array1<S>>,
    pub input: Array2<S>,
}

impl<S: Scalar> Gradients<S> {
    pub fn norm(&self) -> S {
        let w: S = self.weights.iter().map(|g| g.iter().map(|&v| v * v).sum::<S>()).sum();
        let b: S = self.biases.iter().map(|g| g.iter().map(|&v| v * v).sum::<S>()).sum();
        (w + b).sqrt()
    }

    /// Adds `other` scaled by `factor` (for losses summed over several passes).
    pub fn accumulate(&mut self, other: &Gradients<S>, factor: S) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            a.scaled_add(factor, b);
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            a.scaled_add(factor, b);
        }
    }
}

/// Activations recorded by a forward pass, consumed by [`NetworkParams::backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache<S: Scalar> {
    /// `activations[0]` is the input batch, `activations[i + 1]` the output of layer `i`.
    activations: Vec<Array2<S>>,
}

impl<S: Scalar> ForwardCache<S> {
    pub fn output(&self) -> &Array2<S> {
        self.activations.last().expect("cache holds the input")
    }
}

/// Training objective attached to the network output.
#[derive(Debug, Clone, Copy)]
pub enum Loss<'a, S: Scalar> {
    /// Mean of squared differences over every output element.
    Mse(ArrayView2<'a, S>),
    /// Mean binary cross-entropy of probability outputs against 0/1 targets.
    Bce(ArrayView2<'a, S>),
    /// Caller-supplied gradient of the loss with respect to the output.
    Upstream(ArrayView2<'a, S>),
}

impl<S: Scalar> NetworkParams<S> {
    /// Glorot-uniform weights, zero biases.
    pub fn new(layers: Vec<LayerSpec>, l2_lambda: S, rng: &mut Rng) -> Result<Self> {
        validate_layers(&layers)?;
        let weights = layers
            .iter()
            .map(|l| {
                let limit = (6.0 / (l.input_width + l.output_width) as f64).sqrt();
                Array2::from_shape_simple_fn((l.output_width, l.input_width), || {
                    S::lit(rng.random_range(-limit..limit))
                })
            })
            .collect();
        let biases = layers.iter().map(|l| Array1::zeros(l.output_width)).collect();
        Ok(Self {
            layers,
            weights,
            biases,
            l2_lambda,
        })
    }

    /// Multi-layer perceptron `input → hidden... → output`.
    pub fn mlp(
        input: usize,
        hidden: &[usize],
        output: usize,
        hidden_activation: Activation,
        output_activation: Activation,
        l2_lambda: S,
        rng: &mut Rng,
    ) -> Result<Self> {
        let mut widths = vec![input];
        widths.extend_from_slice(hidden);
        widths.push(output);
        let layers = widths
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let act = if i + 2 == widths.len() {
                    output_activation
                } else {
                    hidden_activation
                };
                LayerSpec::new(w[0], w[1], act)
            })
            .collect();
        Self::new(layers, l2_lambda, rng)
    }

    pub fn from_parts(
        layers: Vec<LayerSpec>,
        weights: Vec<Array2<S>>,
        biases: Vec<Array1<S>>,
        l2_lambda: S,
    ) -> Result<Self> {
        validate_layers(&layers)?;
        if weights.len() != layers.len() || biases.len() != layers.len() {
            return Err(Error::Dimension("one weight matrix and bias per layer required".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            if weights[i].dim() != (l.output_width, l.input_width) {
                return Err(Error::Dimension(format!(
                    "layer {i}: weight shape {:?}, expected {:?}",
                    weights[i].dim(),
                    (l.output_width, l.input_width)
                )));
            }
            if biases[i].len() != l.output_width {
                return Err(Error::Dimension(format!("layer {i}: bias length mismatch")));
            }
        }
        if !(l2_lambda >= S::zero()) {
            return Err(Error::Precondition("l2_lambda must be non-negative".into()));
        }
        Ok(Self {
            layers,
            weights,
            biases,
            l2_lambda,
        })
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn weights(&self) -> &[Array2<S>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Array1<S>] {
        &self.biases
    }

    pub fn l2_lambda(&self) -> S {
        self.l2_lambda
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].input_width
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().expect("non-empty").output_width
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum::<usize>() + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }

    pub(crate) fn weights_mut(&mut self) -> &mut [Array2<S>] {
        &mut self.weights
    }

    pub(crate) fn biases_mut(&mut self) -> &mut [Array1<S>] {
        &mut self.biases
    }

    /// Scales the output layer's weights and bias (used to start coupling
    /// layers near the identity).
    pub fn scale_output_layer(&mut self, factor: S) {
        let last = self.layers.len() - 1;
        self.weights[last].mapv_inplace(|w| w * factor);
        self.biases[last].mapv_inplace(|b| b * factor);
    }

    fn check_input(&self, batch: &ArrayView2<S>) -> Result<()> {
        if batch.ncols() != self.input_width() {
            return Err(Error::Dimension(format!(
                "network expects {} input columns, got {}",
                self.input_width(),
                batch.ncols()
            )));
        }
        Ok(())
    }

    fn layer_forward(&self, i: usize, x: &ArrayView2<S>) -> Array2<S> {
        let mut z = x.dot(&self.weights[i].t());
        z += &self.biases[i];
        let act = self.layers[i].activation;
        if act != Activation::Linear {
            z.mapv_inplace(|v| act.apply(v));
        }
        z
    }

    pub fn forward(&self, batch: &ArrayView2<S>) -> Result<Matrix<S>> {
        self.check_input(batch)?;
        let mut x = self.layer_forward(0, batch);
        for i in 1..self.layers.len() {
            x = self.layer_forward(i, &x.view());
        }
        Ok(x)
    }

    /// Forward pass that keeps every activation; errors on non-finite values.
    pub fn forward_cached(&self, batch: &ArrayView2<S>) -> Result<ForwardCache<S>> {
        self.check_input(batch)?;
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(batch.to_owned());
        for i in 0..self.layers.len() {
            let next = self.layer_forward(i, &activations[i].view());
            if next.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numeric { layer: i });
            }
            activations.push(next);
        }
        Ok(ForwardCache { activations })
    }

    /// Backpropagates `grad_output` (dL/d output). The L2 term is not included.
    pub fn backward(&self, cache: &ForwardCache<S>, grad_output: &ArrayView2<S>) -> Gradients<S> {
        let last = self.layers.len() - 1;
        let mut delta = grad_output.to_owned();
        let act = self.layers[last].activation;
        if act != Activation::Linear {
            Zip::from(&mut delta)
                .and(&cache.activations[last + 1])
                .for_each(|d, &y| *d *= act.derivative_from_output(y));
        }
        self.backward_from_preactivation(cache, delta)
    }

    fn backward_from_preactivation(&self, cache: &ForwardCache<S>, mut delta: Array2<S>) -> Gradients<S> {
        let n = self.layers.len();
        let mut gw = vec![Array2::zeros((0, 0)); n];
        let mut gb = vec![Array1::zeros(0); n];
        for i in (0..n).rev() {
            let input = &cache.activations[i];
            gw[i] = delta.t().dot(input);
            gb[i] = delta.sum_axis(Axis(0));
            let mut upstream = delta.dot(&self.weights[i]);
            if i > 0 {
                let act = self.layers[i - 1].activation;
                if act != Activation::Linear {
                    Zip::from(&mut upstream)
                        .and(input)
                        .for_each(|d, &y| *d *= act.derivative_from_output(y));
                }
            }
            delta = upstream;
        }
        Gradients {
            weights: gw,
            biases: gb,
            input: delta,
        }
    }

    /// `λ Σ w²` over all weight matrices.
    pub fn l2_penalty(&self) -> S {
        self.l2_lambda
            * self
                .weights
                .iter()
                .map(|w| w.iter().map(|&v| v * v).sum::<S>())
                .sum::<S>()
    }

    /// Adds the gradient of the L2 penalty, `2 λ w`, to `grads`.
    pub fn add_l2_gradient(&self, grads: &mut Gradients<S>) {
        if self.l2_lambda == S::zero() {
            return;
        }
        let two_lambda = S::lit(2.0) * self.l2_lambda;
        for (g, w) in grads.weights.iter_mut().zip(&self.weights) {
            g.scaled_add(two_lambda, w);
        }
    }

    /// Loss value (data term plus L2) and its gradients.
    pub fn gradients(&self, batch: &ArrayView2<S>, loss: Loss<'_, S>) -> Result<(S, Gradients<S>)> {
        let cache = self.forward_cached(batch)?;
        let out = cache.output();
        let (value, mut grads) = match loss {
            Loss::Mse(target) => {
                check_target(out, &target)?;
                let count = S::from_usize_lossy(out.len().max(1));
                let diff = out - &target;
                let value = diff.iter().map(|&d| d * d).sum::<S>() / count;
                let grad = diff.mapv(|d| S::lit(2.0) * d / count);
                (value, self.backward(&cache, &grad.view()))
            }
            Loss::Bce(target) => {
                check_target(out, &target)?;
                let count = S::from_usize_lossy(out.len().max(1));
                let eps = S::lit(1e-12);
                let mut value = S::zero();
                Zip::from(out).and(&target).for_each(|&p, &t| {
                    let p = p.max(eps).min(S::one() - eps);
                    value -= t * p.ln() + (S::one() - t) * (S::one() - p).ln();
                });
                value /= count;
                let last = self.layers.len() - 1;
                let grads = if self.layers[last].activation == Activation::Sigmoid {
                    // Sigmoid and cross-entropy derivatives cancel to p - t.
                    let delta = (out - &target).mapv(|d| d / count);
                    self.backward_from_preactivation(&cache, delta)
                } else {
                    let mut grad = Array2::zeros(out.raw_dim());
                    Zip::from(&mut grad).and(out).and(&target).for_each(|g, &p, &t| {
                        let p = p.max(eps).min(S::one() - eps);
                        *g = (p - t) / (p * (S::one() - p)) / count;
                    });
                    self.backward(&cache, &grad.view())
                };
                (value, grads)
            }
            Loss::Upstream(grad) => {
                check_target(out, &grad)?;
                (S::zero(), self.backward(&cache, &grad))
            }
        };
        self.add_l2_gradient(&mut grads);
        Ok((value + self.l2_penalty(), grads))
    }
}

fn check_target<S: Scalar>(out: &Array2<S>, target: &ArrayView2<S>) -> Result<()> {
    if out.dim() != target.dim() {
        return Err(Error::Dimension(format!(
            "network output {:?} vs target {:?}",
            out.dim(),
            target.dim()
        )));
    }
    Ok(())
}

fn validate_layers(layers: &[LayerSpec]) -> Result<()> {
    if layers.is_empty() {
        return Err(Error::Dimension("network needs at least one layer".into()));
    }
    for (i, l) in layers.iter().enumerate() {
        if l.input_width == 0 || l.output_width == 0 {
            return Err(Error::Dimension(format!("layer {i} has zero width")));
        }
    }
    for (i, pair) in layers.windows(2).enumerate() {
        if pair[0].output_width != pair[1].input_width {
            return Err(Error::Dimension(format!(
                "layer {i} outputs {} but layer {} expects {}",
                pair[0].output_width,
                i + 1,
                pair[1].input_width
            )));
        }
    }
    Ok(())
}
