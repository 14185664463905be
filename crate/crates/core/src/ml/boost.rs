//! SAMME AdaBoost over depth-one trees.

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use super::tree::{DecisionTree, MaxFeatures, TreeConfig};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaBoostConfig {
    pub rounds: usize,
    pub learning_rate: f64,
}

impl Default for AdaBoostConfig {
    fn default() -> Self {
        Self {
            rounds: 50,
            learning_rate: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct AdaBoostModel<S: Scalar> {
    pub stumps: Vec<DecisionTree<S>>,
    pub alphas: Vec<f64>,
    pub n_classes: usize,
}

pub fn adaboost_fit<S: Scalar>(x: &ArrayView2<S>, y: &[usize], n_classes: usize, cfg: &AdaBoostConfig, seed_value: u64) -> Result<AdaBoostModel<S>> {
    let n = y.len();
    if x.nrows() != n {
        return Err(Error::Dimension(format!("{} rows vs {n} labels", x.nrows())));
    }
    let k = n_classes.max(2);
    let first = *y.first().ok_or_else(|| Error::Precondition("no training rows".into()))?;
    if y.iter().all(|&c| c == first) {
        return Err(Error::Precondition("training labels hold a single class".into()));
    }
    let stump_cfg = TreeConfig {
        max_depth: Some(1),
        max_features: MaxFeatures::All,
        min_samples_split: 2,
    };
    let mut w = vec![1.0 / n as f64; n];
    let mut model = AdaBoostModel {
        stumps: Vec::new(),
        alphas: Vec::new(),
        n_classes: k,
    };
    for round in 0..cfg.rounds {
        let stump = DecisionTree::fit(x, y, Some(&w), k, stump_cfg, seed::derive(seed_value, &[round as u64]))?;
        let pred = stump.predict(x);
        let err: f64 = pred.iter().zip(y).zip(&w).filter(|((p, t), _)| p != t).map(|(_, wi)| wi).sum::<f64>()
            / w.iter().sum::<f64>();
        if err <= 0.0 {
            // Perfect learner: keep it alone with unit weight.
            model.stumps.push(stump);
            model.alphas.push(1.0);
            break;
        }
        if err >= 1.0 - 1.0 / k as f64 {
            if model.stumps.is_empty() {
                return Err(Error::Precondition("first weak learner is no better than chance".into()));
            }
            break;
        }
        let alpha = cfg.learning_rate * (((1.0 - err) / err).ln() + ((k - 1) as f64).ln());
        for ((wi, p), t) in w.iter_mut().zip(&pred).zip(y) {
            if p != t {
                *wi *= alpha.exp();
            }
        }
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= total);
        model.stumps.push(stump);
        model.alphas.push(alpha);
    }
    Ok(model)
}

impl<S: Scalar> AdaBoostModel<S> {
    /// Weighted votes per class, using the first `rounds` learners.
    fn votes(&self, x: &ArrayView2<S>, rounds: usize) -> ndarray::Array2<f64> {
        let mut v = ndarray::Array2::zeros((x.nrows(), self.n_classes));
        for (stump, alpha) in self.stumps.iter().zip(&self.alphas).take(rounds) {
            for (i, c) in stump.predict(x).into_iter().enumerate() {
                v[[i, c]] += alpha;
            }
        }
        v
    }

    pub fn predict(&self, x: &ArrayView2<S>) -> Vec<usize> {
        super::tree::argmax_rows(&self.votes(x, self.stumps.len()))
    }

    pub fn predict_staged(&self, x: &ArrayView2<S>, rounds: usize) -> Vec<usize> {
        super::tree::argmax_rows(&self.votes(x, rounds))
    }

    /// Share of votes for class 1.
    pub fn predict_proba(&self, x: &ArrayView2<S>) -> Vec<f64> {
        let v = self.votes(x, self.stumps.len());
        v.rows()
            .into_iter()
            .map(|r| {
                let s = r.sum();
                if s > 0.0 { r[1] / s } else { 0.5 }
            })
            .collect()
    }
}
