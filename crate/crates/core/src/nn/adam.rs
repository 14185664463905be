use ndarray::{Array1, Array2, Zip};
use serde::{Deserialize, Serialize};

use super::network::{Gradients, NetworkParams};
use crate::scalar::Scalar;

/// Adam optimizer moments for one network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct AdamState<S: Scalar> {
    first_w: Vec<Array2<S>>,
    second_w: Vec<Array2<S>>,
    first_b: Vec<Array1<S>>,
    second_b: Vec<Array1<S>>,
    pub step_count: u64,
    pub learning_rate: S,
    pub beta1: S,
    pub beta2: S,
    pub epsilon: S,
}

impl<S: Scalar> AdamState<S> {
    /// Zero moments with beta1 = 0.9, beta2 = 0.999, epsilon = 1e-8.
    pub fn new(net: &NetworkParams<S>, learning_rate: S) -> Self {
        Self {
            first_w: net.weights().iter().map(|w| Array2::zeros(w.raw_dim())).collect(),
            second_w: net.weights().iter().map(|w| Array2::zeros(w.raw_dim())).collect(),
            first_b: net.biases().iter().map(|b| Array1::zeros(b.raw_dim())).collect(),
            second_b: net.biases().iter().map(|b| Array1::zeros(b.raw_dim())).collect(),
            step_count: 0,
            learning_rate,
            beta1: S::lit(0.9),
            beta2: S::lit(0.999),
            epsilon: S::lit(1e-8),
        }
    }
}

/// One bias-corrected Adam step.
pub fn adam_update<S: Scalar>(net: &mut NetworkParams<S>, state: &mut AdamState<S>, grads: &Gradients<S>) {
    state.step_count += 1;
    let t = state.step_count as i32;
    let (b1, b2, eps) = (state.beta1, state.beta2, state.epsilon);
    let c1 = S::one() - b1.powi(t);
    let c2 = S::one() - b2.powi(t);
    let lr = state.learning_rate;
    let one = S::one();

    let step = |p: &mut S, m: &mut S, v: &mut S, g: S| {
        *m = b1 * *m + (one - b1) * g;
        *v = b2 * *v + (one - b2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= lr * m_hat / (v_hat.sqrt() + eps);
    };

    for (i, w) in net.weights_mut().iter_mut().enumerate() {
        Zip::from(w)
            .and(&mut state.first_w[i])
            .and(&mut state.second_w[i])
            .and(&grads.weights[i])
            .for_each(|p, m, v, &g| step(p, m, v, g));
    }
    for (i, b) in net.biases_mut().iter_mut().enumerate() {
        Zip::from(b)
            .and(&mut state.first_b[i])
            .and(&mut state.second_b[i])
            .and(&grads.biases[i])
            .for_each(|p, m, v, &g| step(p, m, v, g));
    }
}
