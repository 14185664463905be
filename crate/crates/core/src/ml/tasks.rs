//! Composite tasks built from the learners: utility of synthetic data for
//! downstream classifiers, and real-vs-synthetic detection.

use std::collections::BTreeMap;

use ndarray::{concatenate, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::boost::{adaboost_fit, AdaBoostConfig};
use super::linear::{logistic_fit, svm_fit, LogisticConfig, SvmConfig};
use super::mlp::{mlp_fit, MlpConfig};
use super::preprocess::RobustPreprocessor;
use super::tree::{DecisionTree, MaxFeatures, TreeConfig};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{permutation, select_rows};
use crate::scalar::Scalar;
use crate::seed;

pub const EFFICIENCY_MODELS: [&str; 4] = ["adaboost", "dtree", "logreg", "mlp"];
pub const DTREE_MAX_DEPTH: usize = 15;
pub const DETECTION_TEST_FRACTION: f64 = 0.2;

fn labeled_xy<S: Scalar>(d: &Dataset<S>) -> (ndarray::Array2<S>, Vec<usize>) {
    let rows = d.labeled_indices();
    let x = select_rows(&d.features(), &rows);
    let y = rows.iter().map(|&i| d.labels()[i] as usize).collect();
    (x, y)
}

fn accuracy(pred: &[usize], truth: &[usize]) -> f64 {
    pred.iter().zip(truth).filter(|(p, t)| p == t).count() as f64 / truth.len().max(1) as f64
}

/// Trains each model on the labeled rows of `train` and returns its accuracy
/// on the labeled rows of `test`, keyed by model name.
pub fn train_efficiency_models<S: Scalar>(train: &Dataset<S>, test: &Dataset<S>, seed_value: u64) -> Result<BTreeMap<String, f64>> {
    let (xtr, ytr) = labeled_xy(train);
    let (xte, yte) = labeled_xy(test);
    if xte.nrows() == 0 {
        return Err(Error::Precondition("efficiency test set has no labeled rows".into()));
    }
    if xtr.ncols() != xte.ncols() {
        return Err(Error::Dimension(format!("train has {} columns, test {}", xtr.ncols(), xte.ncols())));
    }
    let single = !(ytr.contains(&0) && ytr.contains(&1));
    let prep = RobustPreprocessor::fit(&xtr.view())?;
    let xtr = prep.transform(&xtr.view())?;
    let xte = prep.transform(&xte.view())?;
    let mut out = BTreeMap::new();
    for name in EFFICIENCY_MODELS {
        if single {
            return Err(Error::Precondition(format!("{name}: training set holds a single class")));
        }
        let s = seed::derive_named(seed_value, name);
        let pred = match name {
            "adaboost" => adaboost_fit(&xtr.view(), &ytr, 2, &AdaBoostConfig::default(), s)?.predict(&xte.view()),
            "dtree" => {
                let cfg = TreeConfig {
                    max_depth: Some(DTREE_MAX_DEPTH),
                    max_features: MaxFeatures::All,
                    min_samples_split: 2,
                };
                DecisionTree::fit(&xtr.view(), &ytr, None, 2, cfg, s)?.predict(&xte.view())
            }
            "logreg" => logistic_fit(&xtr.view(), &ytr, &LogisticConfig::default())?.predict(&xte.view()),
            _ => mlp_fit(&xtr.view(), &ytr, &MlpConfig::default(), s)?.predict(&xte.view())?,
        };
        out.insert(name.to_string(), accuracy(&pred, &yte));
    }
    Ok(out)
}

/// Held-out scores of the real-vs-synthetic detectors. `truth` is 1 for real
/// rows and 0 for synthetic ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionScores {
    pub truth: Vec<i32>,
    pub logreg: Vec<f64>,
    pub svm: Vec<f64>,
}

/// Per-class shuffled split; returns (train rows, test rows).
pub fn stratified_split(y: &[usize], test_fraction: f64, seed_value: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = seed::rng(seed_value);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    let classes = y.iter().max().map_or(0, |m| m + 1);
    for c in 0..classes {
        let members: Vec<usize> = (0..y.len()).filter(|&i| y[i] == c).collect();
        // Both sides get at least one row of every class that has two.
        let n_test = match members.len() {
            0 | 1 => 0,
            m => ((m as f64 * test_fraction).round() as usize).clamp(1, m - 1),
        };
        for (pos, p) in permutation(members.len(), &mut rng).into_iter().enumerate() {
            if pos < n_test { test.push(members[p]) } else { train.push(members[p]) }
        }
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

/// Trains logistic regression and a linear SVM to tell real from synthetic
/// rows on a stratified 80/20 split, returning their held-out scores.
pub fn linear_classifiers_for_detection<S: Scalar>(real: &ArrayView2<S>, synth: &ArrayView2<S>, seed_value: u64) -> Result<DetectionScores> {
    if real.nrows() == 0 || synth.nrows() == 0 {
        return Err(Error::Precondition("detection needs non-empty real and synthetic sets".into()));
    }
    if real.ncols() != synth.ncols() {
        return Err(Error::Dimension(format!("real has {} columns, synthetic {}", real.ncols(), synth.ncols())));
    }
    let x = concatenate(Axis(0), &[real.view(), synth.view()]).map_err(|e| Error::Dimension(e.to_string()))?;
    let y: Vec<usize> = (0..x.nrows()).map(|i| usize::from(i < real.nrows())).collect();
    let (train, test) = stratified_split(&y, DETECTION_TEST_FRACTION, seed_value);
    let ytr: Vec<usize> = train.iter().map(|&i| y[i]).collect();
    let prep = RobustPreprocessor::fit(&select_rows(&x.view(), &train).view())?;
    let xtr = prep.transform(&select_rows(&x.view(), &train).view())?;
    let xte = prep.transform(&select_rows(&x.view(), &test).view())?;
    let logreg = logistic_fit(&xtr.view(), &ytr, &LogisticConfig::default())?.predict_proba(&xte.view());
    let svm = svm_fit(&xtr.view(), &ytr, &SvmConfig::default())?.decision(&xte.view());
    Ok(DetectionScores {
        truth: test.iter().map(|&i| y[i] as i32).collect(),
        logreg,
        svm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::roc_auc;
    use crate::linalg::standard_normal;

    fn blobs(n: usize, seed_value: u64) -> Dataset<f64> {
        let mut rng = seed::rng(seed_value);
        let mut x = standard_normal::<f64>(n, 2, &mut rng);
        let y: Vec<i32> = (0..n as i32).map(|i| i % 2).collect();
        for i in 0..n {
            if y[i] == 1 {
                x[[i, 0]] += 8.0;
            }
        }
        Dataset::with_default_names(x, y).unwrap()
    }

    #[test]
    fn separable_blobs_are_learned_by_all_models() {
        let d = blobs(300, 1);
        let acc = train_efficiency_models(&d, &d, 0).unwrap();
        assert_eq!(acc.len(), 4);
        for (name, a) in &acc {
            assert!(*a >= 0.99, "{name}: {a}");
        }
    }

    #[test]
    fn inverted_labels_invert_accuracy() {
        let mut rng = seed::rng(4);
        let n = 400;
        let x = standard_normal::<f64>(n, 1, &mut rng);
        // Noisy threshold so the baseline is well below 1.
        let noise = standard_normal::<f64>(n, 1, &mut rng);
        let y: Vec<i32> = (0..n).map(|i| i32::from(x[[i, 0]] + 0.7 * noise[[i, 0]] > 0.0)).collect();
        let train = Dataset::with_default_names(x.clone(), y.clone()).unwrap();
        let inverted = train.with_labels(y.iter().map(|v| 1 - v).collect()).unwrap();
        let test_x = standard_normal::<f64>(n, 1, &mut rng);
        let test_y: Vec<i32> = (0..n).map(|i| i32::from(test_x[[i, 0]] > 0.0)).collect();
        let test = Dataset::with_default_names(test_x, test_y).unwrap();
        let base = train_efficiency_models(&train, &test, 0).unwrap()["logreg"];
        let inv = train_efficiency_models(&inverted, &test, 0).unwrap()["logreg"];
        assert!((inv - (1.0 - base)).abs() < 0.02, "{base} {inv}");
    }

    #[test]
    fn single_class_error_names_model() {
        let x = ndarray::array![[0.0], [1.0]];
        let d = Dataset::with_default_names(x, vec![1, 1]).unwrap();
        let err = train_efficiency_models(&d, &d, 0).unwrap_err().to_string();
        assert!(err.contains("adaboost"), "{err}");
    }

    #[test]
    fn detection_auc_tracks_separability() {
        let mut rng = seed::rng(7);
        let real = standard_normal::<f64>(500, 2, &mut rng);
        let same = train_det(&real, &real.clone());
        assert!((same - 0.5).abs() <= 0.05, "{same}");
        let shifted = real.mapv(|v| v + 10.0);
        assert!(train_det(&real, &shifted) > 0.99);
    }

    fn train_det(real: &ndarray::Array2<f64>, synth: &ndarray::Array2<f64>) -> f64 {
        let s = linear_classifiers_for_detection(&real.view(), &synth.view(), 3).unwrap();
        roc_auc(&s.logreg, &s.truth).unwrap()
    }

    #[test]
    fn split_is_stratified_and_deterministic() {
        let y: Vec<usize> = (0..100).map(|i| usize::from(i < 30)).collect();
        let (tr, te) = stratified_split(&y, 0.2, 9);
        assert_eq!(te.len(), 20);
        assert_eq!(te.iter().filter(|&&i| y[i] == 1).count(), 6);
        assert_eq!(tr.len() + te.len(), 100);
        assert_eq!((tr, te), stratified_split(&y, 0.2, 9));
    }
}
