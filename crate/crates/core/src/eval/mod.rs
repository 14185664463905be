//! Comparison metrics between real and generated data, classifier scores
//! and the generator vote.

pub mod classification;
pub mod report;
pub mod stats;
pub mod vote;

pub use classification::{aauc_from_auc, classifier_scores, detection_aauc, roc_auc, ClassifierScores};
pub use report::{evaluate, evaluate_discriminator, CrossValidatedScores, Evaluation, MetricDetails, MetricReport};
pub use stats::{gmm_loglik, ks_two_sample, pearson_similarity, range_coverage, wasserstein_1d, KsResult};
pub use vote::{vote, Better, Metric, MetricValues, TiePolicy, VotePolicy, VoteTally};
