//! Bootstrap-aggregated CART forest.

use ndarray::{Array2, ArrayView2};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::tree::{argmax_rows, DecisionTree, MaxFeatures, TreeConfig};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    pub tree_count: usize,
    pub max_depth: Option<usize>,
    pub max_features: MaxFeatures,
    /// Weight classes by N / (C · N_c).
    pub balanced_class_weights: bool,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            tree_count: 100,
            max_depth: None,
            max_features: MaxFeatures::Sqrt,
            balanced_class_weights: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ForestModel<S: Scalar> {
    pub trees: Vec<DecisionTree<S>>,
    pub class_count: usize,
    pub max_depth: Option<usize>,
    /// Set when training saw a single class; predictions are then constant.
    pub constant_class: Option<usize>,
}

/// `N / (C · N_c)` per class (zero for absent classes).
pub fn balanced_weights(y: &[usize], n_classes: usize) -> Vec<f64> {
    let mut counts = vec![0usize; n_classes];
    for &c in y {
        counts[c] += 1;
    }
    let present = counts.iter().filter(|c| **c > 0).count().max(1);
    counts
        .iter()
        .map(|&c| if c == 0 { 0.0 } else { y.len() as f64 / (present as f64 * c as f64) })
        .collect()
}

pub fn forest_fit<S: Scalar>(
    x: &ArrayView2<S>,
    y: &[usize],
    n_classes: usize,
    cfg: &ForestConfig,
    seed_value: u64,
) -> Result<ForestModel<S>> {
    if x.nrows() != y.len() {
        return Err(Error::Dimension(format!("{} rows vs {} labels", x.nrows(), y.len())));
    }
    if y.is_empty() {
        return Err(Error::Precondition("cannot fit a forest on zero rows".into()));
    }
    let n_classes = n_classes.max(y.iter().max().map_or(0, |m| m + 1));
    let first = y[0];
    if y.iter().all(|&c| c == first) {
        return Ok(ForestModel {
            trees: Vec::new(),
            class_count: n_classes,
            max_depth: cfg.max_depth,
            constant_class: Some(first),
        });
    }
    let weights: Vec<f64> = if cfg.balanced_class_weights {
        let cw = balanced_weights(y, n_classes);
        y.iter().map(|&c| cw[c]).collect()
    } else {
        vec![1.0; y.len()]
    };
    let tree_cfg = TreeConfig {
        max_depth: cfg.max_depth,
        max_features: cfg.max_features,
        min_samples_split: 2,
    };
    let n = y.len();
    let trees = (0..cfg.tree_count.max(1))
        .map(|t| {
            let tree_seed = seed::derive(seed_value, &[t as u64]);
            let mut rng = seed::rng(tree_seed);
            let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            DecisionTree::fit_rows(x, y, &weights, rows, n_classes, tree_cfg, seed::derive(tree_seed, &[1]))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ForestModel {
        trees,
        class_count: n_classes,
        max_depth: cfg.max_depth,
        constant_class: None,
    })
}

impl<S: Scalar> ForestModel<S> {
    /// Mean of the per-tree leaf class frequencies.
    pub fn predict_proba(&self, x: &ArrayView2<S>) -> Array2<f64> {
        let mut out = Array2::zeros((x.nrows(), self.class_count));
        if let Some(c) = self.constant_class {
            out.column_mut(c).fill(1.0);
            return out;
        }
        for t in &self.trees {
            out += &t.predict_proba(x);
        }
        out / self.trees.len() as f64
    }

    pub fn predict(&self, x: &ArrayView2<S>) -> Vec<usize> {
        argmax_rows(&self.predict_proba(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::standard_normal;
    use ndarray::array;
    use proptest::prelude::*;

    fn blobs(n: usize, seed_value: u64) -> (Array2<f64>, Vec<usize>) {
        let mut rng = seed::rng(seed_value);
        let mut x = standard_normal::<f64>(n, 2, &mut rng);
        let y: Vec<usize> = (0..n).map(|i| i % 2).collect();
        for i in 0..n {
            if y[i] == 1 {
                x[[i, 0]] += 8.0;
                x[[i, 1]] += 8.0;
            }
        }
        (x, y)
    }

    #[test]
    fn separable_blobs_fit_perfectly() {
        let (x, y) = blobs(200, 1);
        let f = forest_fit(&x.view(), &y, 2, &ForestConfig::default(), 3).unwrap();
        assert_eq!(f.predict(&x.view()), y);
        for r in f.predict_proba(&x.view()).rows() {
            assert!((r.sum() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn xor_fits_perfectly() {
        let x = array![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]];
        let y = vec![0, 1, 1, 0];
        let cfg = ForestConfig {
            max_features: MaxFeatures::All,
            ..ForestConfig::default()
        };
        let f = forest_fit(&x.view(), &y, 2, &cfg, 0).unwrap();
        // Bootstraps may miss a corner; the ensemble still votes it back.
        assert_eq!(f.predict(&x.view()), y);
    }

    #[test]
    fn single_class_is_degenerate_not_error() {
        let x = array![[0.0], [1.0]];
        let f = forest_fit(&x.view(), &[1, 1], 2, &ForestConfig::default(), 0).unwrap();
        assert_eq!(f.constant_class, Some(1));
        assert_eq!(f.predict_proba(&x.view()), array![[0.0, 1.0], [0.0, 1.0]]);
    }

    #[test]
    fn deterministic_given_seed() {
        let (x, y) = blobs(80, 2);
        let cfg = ForestConfig {
            tree_count: 10,
            ..ForestConfig::default()
        };
        assert_eq!(forest_fit(&x.view(), &y, 2, &cfg, 9).unwrap(), forest_fit(&x.view(), &y, 2, &cfg, 9).unwrap());
    }

    #[test]
    fn balanced_weights_formula() {
        assert_eq!(balanced_weights(&[0, 0, 0, 1], 2), vec![4.0 / 6.0, 2.0]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]
        #[test]
        fn prediction_is_argmax_of_proba(s in 0u64..500) {
            let mut rng = seed::rng(s);
            let x = standard_normal::<f64>(40, 2, &mut rng);
            let y: Vec<usize> = (0..40).map(|i| usize::from(x[[i, 0]] * x[[i, 1]] > 0.0)).collect();
            prop_assume!(y.contains(&0) && y.contains(&1));
            let cfg = ForestConfig { tree_count: 15, ..ForestConfig::default() };
            let f = forest_fit(&x.view(), &y, 2, &cfg, s).unwrap();
            let test = standard_normal::<f64>(30, 2, &mut rng);
            let p = f.predict_proba(&test.view());
            let pred = f.predict(&test.view());
            for (i, r) in p.rows().into_iter().enumerate() {
                prop_assert!((r.sum() - 1.0).abs() < 1e-12);
                let best = r.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                prop_assert_eq!(r[pred[i]], best);
            }
        }
    }
}
