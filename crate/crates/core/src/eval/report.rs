//! Assembly of the per-generator metric report and cross-validated scoring
//! of the final discriminator.

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use super::classification::{classifier_scores, detection_aauc, ClassifierScores, DEFAULT_THRESHOLD};
use super::stats::{gmm_loglik, ks_two_sample, pearson_similarity, range_coverage_columns, wasserstein_1d, KsResult};
use super::vote::{Metric, MetricValues};
use crate::data::{Dataset, FoldAssignment};
use crate::error::{Error, Result};
use crate::info::DEFAULT_MAX_COMPONENTS;
use crate::ml::linear_classifiers_for_detection;
use crate::scalar::Scalar;
use crate::seed;

/// The eight comparison metrics, serialized with exactly these keys.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    #[serde(rename = "ks_D")]
    pub ks_d: f64,
    pub ks_p: f64,
    pub wasserstein: f64,
    pub pearson_similarity: f64,
    pub range_coverage: f64,
    pub gmm_loglik: f64,
    pub detection_lr_aauc: f64,
    pub detection_svm_aauc: f64,
}

impl MetricReport {
    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::KsD => self.ks_d,
            Metric::KsP => self.ks_p,
            Metric::Wasserstein => self.wasserstein,
            Metric::PearsonSimilarity => self.pearson_similarity,
            Metric::RangeCoverage => self.range_coverage,
            Metric::GmmLoglik => self.gmm_loglik,
            Metric::DetectionLrAauc => self.detection_lr_aauc,
            Metric::DetectionSvmAauc => self.detection_svm_aauc,
        }
    }

    pub fn vote_values(&self) -> MetricValues {
        Metric::ALL.iter().map(|&m| (m, self.get(m))).collect()
    }
}

/// Per-column statistics behind the aggregated report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricDetails {
    pub ks_per_column: Vec<KsResult>,
    pub wasserstein_per_column: Vec<f64>,
    /// None for constant real columns, which are skipped.
    pub coverage_per_column: Vec<Option<f64>>,
    pub detection_lr_auc: f64,
    pub detection_svm_auc: f64,
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub metrics: MetricReport,
    pub details: MetricDetails,
}

fn column<S: Scalar>(m: &ArrayView2<S>, j: usize) -> Vec<S> {
    m.column(j).to_vec()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Compares real rows against generated rows on every metric. Per-column
/// KS and Wasserstein values are averaged over columns.
pub fn evaluate<S: Scalar>(real: &ArrayView2<S>, synth: &ArrayView2<S>, seed_value: u64) -> Result<Evaluation> {
    if real.ncols() != synth.ncols() {
        return Err(Error::Dimension(format!("real has {} columns, synthetic {}", real.ncols(), synth.ncols())));
    }
    if real.ncols() == 0 || real.nrows() == 0 || synth.nrows() == 0 {
        return Err(Error::Precondition("evaluation needs non-empty real and synthetic data".into()));
    }
    let mut ks = Vec::with_capacity(real.ncols());
    let mut w1 = Vec::with_capacity(real.ncols());
    for j in 0..real.ncols() {
        let (a, b) = (column(real, j), column(synth, j));
        ks.push(ks_two_sample(&a, &b)?);
        w1.push(wasserstein_1d(&a, &b)?);
    }
    let coverage_cols = range_coverage_columns(real, synth)?;
    let present: Vec<f64> = coverage_cols.iter().flatten().copied().collect();
    if present.is_empty() {
        return Err(Error::Undefined("range coverage: every real column is constant".into()));
    }
    let loglik = gmm_loglik(real, synth, DEFAULT_MAX_COMPONENTS, seed::derive_named(seed_value, "gmm_loglik"))?;
    let det = linear_classifiers_for_detection(real, synth, seed::derive_named(seed_value, "detection"))?;
    let lr_auc = super::roc_auc(&det.logreg, &det.truth)?;
    let svm_auc = super::roc_auc(&det.svm, &det.truth)?;
    let metrics = MetricReport {
        ks_d: mean(&ks.iter().map(|k| k.d).collect::<Vec<_>>()),
        ks_p: mean(&ks.iter().map(|k| k.p_value).collect::<Vec<_>>()),
        wasserstein: mean(&w1),
        pearson_similarity: pearson_similarity(real, synth)?,
        range_coverage: mean(&present),
        gmm_loglik: loglik,
        detection_lr_aauc: detection_aauc(&det.logreg, &det.truth, DEFAULT_THRESHOLD)?,
        detection_svm_aauc: detection_aauc(&det.svm, &det.truth, DEFAULT_THRESHOLD)?,
    };
    Ok(Evaluation {
        metrics,
        details: MetricDetails {
            ks_per_column: ks,
            wasserstein_per_column: w1,
            coverage_per_column: coverage_cols,
            detection_lr_auc: lr_auc,
            detection_svm_auc: svm_auc,
            tau: DEFAULT_THRESHOLD,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossValidatedScores {
    pub per_fold: Vec<ClassifierScores>,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Mean over folds where both classes are present.
    pub roc_auc: Option<f64>,
}

/// Scores a discriminator by cross-validation over the labeled rows.
/// `train_and_score(fold, train, test)` fits on `train` and returns the
/// class-1 probability of each row of `test`.
pub fn evaluate_discriminator<S, F>(labeled: &Dataset<S>, folds: &FoldAssignment, mut train_and_score: F) -> Result<CrossValidatedScores>
where
    S: Scalar,
    F: FnMut(usize, &Dataset<S>, &Dataset<S>) -> Result<Vec<f64>>,
{
    if folds.fold_index_per_row.len() != labeled.n_rows() {
        return Err(Error::Dimension(format!(
            "fold assignment covers {} rows, dataset has {}",
            folds.fold_index_per_row.len(),
            labeled.n_rows()
        )));
    }
    let mut per_fold = Vec::with_capacity(folds.k);
    for fold in 0..folds.k {
        let train = labeled.subset(&folds.train_indices(fold));
        let test_rows: Vec<usize> = folds.test_indices(fold).into_iter().filter(|&i| labeled.labeled_mask()[i]).collect();
        let test = labeled.subset(&test_rows);
        let probs = train_and_score(fold, &train, &test)?;
        per_fold.push(classifier_scores(&probs, test.labels(), DEFAULT_THRESHOLD)?);
    }
    let avg = |f: fn(&ClassifierScores) -> f64| per_fold.iter().map(f).sum::<f64>() / per_fold.len() as f64;
    let aucs: Vec<f64> = per_fold.iter().filter_map(|s| s.roc_auc).collect();
    Ok(CrossValidatedScores {
        accuracy: avg(|s| s.accuracy),
        precision: avg(|s| s.precision),
        recall: avg(|s| s.recall),
        f1: avg(|s| s.f1),
        roc_auc: (!aucs.is_empty()).then(|| mean(&aucs)),
        per_fold,
    })
}
