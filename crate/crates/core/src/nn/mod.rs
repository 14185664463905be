//! Minimal dense-network engine: forward pass, backpropagation, Adam and
//! an L2 weight penalty. Shared by the autoencoder, the generators and the
//! MLP classifier.

mod adam;
mod network;

pub use adam::{adam_update, AdamState};
pub use network::{sigmoid, Activation, ForwardCache, Gradients, LayerSpec, Loss, NetworkParams};

use crate::scalar::Scalar;

impl<S: Scalar> NetworkParams<S> {
    /// All weights then all biases, layer by layer, row-major.
    pub fn parameters_flat(&self) -> Vec<S> {
        let mut out = Vec::with_capacity(self.parameter_count());
        for w in self.weights() {
            out.extend(w.iter().copied());
        }
        for b in self.biases() {
            out.extend(b.iter().copied());
        }
        out
    }

    /// Inverse of [`NetworkParams::parameters_flat`].
    pub fn set_parameters_flat(&mut self, values: &[S]) {
        assert_eq!(values.len(), self.parameter_count(), "flat parameter length");
        let mut it = values.iter().copied();
        for w in self.weights_mut() {
            w.iter_mut().for_each(|p| *p = it.next().expect("length checked"));
        }
        for b in self.biases_mut() {
            b.iter_mut().for_each(|p| *p = it.next().expect("length checked"));
        }
    }
}

impl<S: Scalar> Gradients<S> {
    /// Same ordering as [`NetworkParams::parameters_flat`].
    pub fn flatten(&self) -> Vec<S> {
        let mut out = Vec::new();
        for w in &self.weights {
            out.extend(w.iter().copied());
        }
        for b in &self.biases {
            out.extend(b.iter().copied());
        }
        out
    }

    pub fn zeros_like(net: &NetworkParams<S>, batch_rows: usize) -> Self {
        Self {
            weights: net.weights().iter().map(|w| ndarray::Array2::zeros(w.raw_dim())).collect(),
            biases: net.biases().iter().map(|b| ndarray::Array1::zeros(b.raw_dim())).collect(),
            input: ndarray::Array2::zeros((batch_rows, net.input_width())),
        }
    }
}
