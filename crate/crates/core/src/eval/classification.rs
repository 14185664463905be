//! Threshold and ranking scores for binary classifiers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierScores {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Absent when the truth holds a single class.
    pub roc_auc: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

fn check(scores: &[f64], truth: &[i32]) -> Result<()> {
    if scores.len() != truth.len() {
        return Err(Error::Dimension(format!("{} scores vs {} labels", scores.len(), truth.len())));
    }
    if scores.is_empty() {
        return Err(Error::Precondition("no predictions to score".into()));
    }
    if let Some(bad) = truth.iter().find(|t| **t != 0 && **t != 1) {
        return Err(Error::Precondition(format!("truth labels must be 0/1, found {bad}")));
    }
    Ok(())
}

/// Predicted positive when `score >= threshold`.
pub fn confusion(scores: &[f64], truth: &[i32], threshold: f64) -> Confusion {
    let mut c = Confusion::default();
    for (&s, &t) in scores.iter().zip(truth) {
        match (s >= threshold, t == 1) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    c
}

/// ROC points (FPR, TPR) from thresholds at every distinct score plus ±∞.
pub fn roc_curve(scores: &[f64], truth: &[i32]) -> Result<Vec<(f64, f64)>> {
    check(scores, truth)?;
    let pos = truth.iter().filter(|t| **t == 1).count();
    let neg = truth.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Undefined("ROC needs both classes in the truth labels".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    // Threshold +∞: nothing predicted positive.
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if truth[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
    }
    Ok(points)
}

/// Area under the ROC curve by the trapezoidal rule.
pub fn roc_auc(scores: &[f64], truth: &[i32]) -> Result<f64> {
    let pts = roc_curve(scores, truth)?;
    Ok(pts
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
        .sum())
}

/// 1 − (2·max(AUC, τ) − 1).
pub fn aauc_from_auc(auc: f64, tau: f64) -> f64 {
    1.0 - (2.0 * auc.max(tau) - 1.0)
}

pub fn detection_aauc(scores: &[f64], truth: &[i32], tau: f64) -> Result<f64> {
    Ok(aauc_from_auc(roc_auc(scores, truth)?, tau))
}

pub fn classifier_scores(probs: &[f64], truth: &[i32], threshold: f64) -> Result<ClassifierScores> {
    check(probs, truth)?;
    let c = confusion(probs, truth, threshold);
    let n = truth.len() as f64;
    let accuracy = (c.tp + c.tn) as f64 / n;
    let precision = if c.tp + c.fp == 0 {
        log::warn!("no predicted positives; precision set to 0");
        0.0
    } else {
        c.tp as f64 / (c.tp + c.fp) as f64
    };
    let recall = if c.tp + c.fn_ == 0 {
        0.0
    } else {
        c.tp as f64 / (c.tp + c.fn_) as f64
    };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    let roc_auc = match roc_auc(probs, truth) {
        Ok(v) => Some(v),
        Err(Error::Undefined(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(ClassifierScores {
        accuracy,
        precision,
        recall,
        f1,
        roc_auc,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hand_confusion_table() {
        let s = classifier_scores(&[0.9, 0.4, 0.2, 0.6], &[1, 1, 0, 0], 0.5).unwrap();
        assert_eq!((s.accuracy, s.precision, s.recall, s.f1), (0.5, 0.5, 0.5, 0.5));
        let p = classifier_scores(&[0.9, 0.8, 0.1, 0.2], &[1, 1, 0, 0], 0.5).unwrap();
        assert_eq!((p.accuracy, p.f1, p.roc_auc), (1.0, 1.0, Some(1.0)));
        let all = classifier_scores(&[0.9; 4], &[1, 1, 0, 0], 0.5).unwrap();
        assert_eq!((all.recall, all.precision), (1.0, 0.5));
        let none = classifier_scores(&[0.1; 4], &[1, 1, 0, 0], 0.5).unwrap();
        assert_eq!((none.precision, none.f1), (0.0, 0.0));
    }

    #[test]
    fn aauc_branches() {
        assert_eq!(aauc_from_auc(0.5, 0.5), 1.0);
        assert_eq!(aauc_from_auc(1.0, 0.5), 0.0);
        assert_eq!(aauc_from_auc(0.3, 0.5), 1.0);
        assert!((aauc_from_auc(0.75, 0.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn single_class_roc_is_undefined() {
        assert!(matches!(roc_auc(&[0.1, 0.2], &[1, 1]), Err(Error::Undefined(_))));
        assert!(matches!(detection_aauc(&[0.1, 0.2], &[0, 0], 0.5), Err(Error::Undefined(_))));
        assert_eq!(classifier_scores(&[0.9, 0.1], &[1, 1], 0.5).unwrap().roc_auc, None);
    }

    fn mann_whitney(scores: &[f64], truth: &[i32]) -> f64 {
        let mut u = 0.0;
        let (mut np, mut nn) = (0.0, 0.0);
        for (i, &ti) in truth.iter().enumerate() {
            if ti != 1 {
                continue;
            }
            np += 1.0;
            for (j, &tj) in truth.iter().enumerate() {
                if tj == 0 {
                    u += if scores[i] > scores[j] {
                        1.0
                    } else if scores[i] == scores[j] {
                        0.5
                    } else {
                        0.0
                    };
                }
            }
        }
        for &t in truth {
            if t == 0 {
                nn += 1.0;
            }
        }
        u / (np * nn)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn auc_equals_normalised_mann_whitney(
            data in proptest::collection::vec((0u8..6, 0i32..2), 2..40)
        ) {
            let scores: Vec<f64> = data.iter().map(|(s, _)| *s as f64 / 5.0).collect();
            let truth: Vec<i32> = data.iter().map(|(_, t)| *t).collect();
            prop_assume!(truth.contains(&0) && truth.contains(&1));
            let auc = roc_auc(&scores, &truth).unwrap();
            prop_assert!((auc - mann_whitney(&scores, &truth)).abs() < 1e-9);
        }
    }
}
