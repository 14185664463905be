//! Per-metric voting across generators.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    KsD,
    KsP,
    Wasserstein,
    PearsonSimilarity,
    RangeCoverage,
    GmmLoglik,
    DetectionLrAauc,
    DetectionSvmAauc,
}

impl Metric {
    pub const ALL: [Metric; 8] = [
        Metric::KsD,
        Metric::KsP,
        Metric::Wasserstein,
        Metric::PearsonSimilarity,
        Metric::RangeCoverage,
        Metric::GmmLoglik,
        Metric::DetectionLrAauc,
        Metric::DetectionSvmAauc,
    ];

    pub fn key(self) -> &'static str {
        match self {
            Metric::KsD => "ks_D",
            Metric::KsP => "ks_p",
            Metric::Wasserstein => "wasserstein",
            Metric::PearsonSimilarity => "pearson_similarity",
            Metric::RangeCoverage => "range_coverage",
            Metric::GmmLoglik => "gmm_loglik",
            Metric::DetectionLrAauc => "detection_lr_aauc",
            Metric::DetectionSvmAauc => "detection_svm_aauc",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Better {
    Lower,
    Higher,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TiePolicy {
    /// Every generator sharing the best value gets a vote.
    Shared,
    /// A tied best value awards nothing.
    NoVote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VotePolicy {
    pub metrics: Vec<(Metric, Better)>,
    pub ties: TiePolicy,
}

impl Default for VotePolicy {
    /// Eight contested metrics, shared ties, p-value higher-is-better and
    /// log-likelihood lower-is-better.
    fn default() -> Self {
        Self {
            metrics: vec![
                (Metric::KsD, Better::Lower),
                (Metric::KsP, Better::Higher),
                (Metric::Wasserstein, Better::Lower),
                (Metric::PearsonSimilarity, Better::Lower),
                (Metric::RangeCoverage, Better::Higher),
                (Metric::GmmLoglik, Better::Lower),
                (Metric::DetectionLrAauc, Better::Higher),
                (Metric::DetectionSvmAauc, Better::Higher),
            ],
            ties: TiePolicy::Shared,
        }
    }
}

impl VotePolicy {
    /// Seven metrics without the p-value, log-likelihood higher-is-better,
    /// ties award nothing.
    pub fn strict() -> Self {
        Self {
            metrics: vec![
                (Metric::KsD, Better::Lower),
                (Metric::Wasserstein, Better::Lower),
                (Metric::PearsonSimilarity, Better::Lower),
                (Metric::RangeCoverage, Better::Higher),
                (Metric::GmmLoglik, Better::Higher),
                (Metric::DetectionLrAauc, Better::Higher),
                (Metric::DetectionSvmAauc, Better::Higher),
            ],
            ties: TiePolicy::NoVote,
        }
    }
}

pub type MetricValues = BTreeMap<Metric, f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoteTally {
    /// `"metric@dataset"` → generators awarded the vote.
    pub per_metric_winner: BTreeMap<String, Vec<String>>,
    pub totals: BTreeMap<String, usize>,
    pub winner: String,
}

/// Tallies votes over `(generator, dataset) → metric values`.
pub fn vote(reports: &BTreeMap<(String, String), MetricValues>, policy: &VotePolicy) -> Result<VoteTally> {
    let generators: BTreeSet<&String> = reports.keys().map(|(g, _)| g).collect();
    let datasets: BTreeSet<&String> = reports.keys().map(|(_, d)| d).collect();
    if generators.is_empty() {
        return Err(Error::Report("no reports to vote on".into()));
    }
    let mut totals: BTreeMap<String, usize> = generators.iter().map(|g| ((*g).clone(), 0)).collect();
    let mut per_metric = BTreeMap::new();
    for dataset in &datasets {
        for &(metric, better) in &policy.metrics {
            let mut cell = Vec::new();
            for g in &generators {
                let values = reports
                    .get(&((*g).clone(), (*dataset).clone()))
                    .ok_or_else(|| Error::Report(format!("missing report for generator `{g}` on `{dataset}`")))?;
                let v = values
                    .get(&metric)
                    .ok_or_else(|| Error::Report(format!("report for `{g}` on `{dataset}` lacks {metric}")))?;
                cell.push(((*g).clone(), *v));
            }
            let best = cell
                .iter()
                .map(|(_, v)| *v)
                .filter(|v| !v.is_nan())
                .fold(None, |acc: Option<f64>, v| {
                    Some(match (acc, better) {
                        (None, _) => v,
                        (Some(a), Better::Lower) => a.min(v),
                        (Some(a), Better::Higher) => a.max(v),
                    })
                });
            let Some(best) = best else { continue };
            let winners: Vec<String> = cell.into_iter().filter(|(_, v)| *v == best).map(|(g, _)| g).collect();
            let awarded = match policy.ties {
                TiePolicy::Shared => winners,
                TiePolicy::NoVote if winners.len() == 1 => winners,
                TiePolicy::NoVote => Vec::new(),
            };
            for g in &awarded {
                *totals.get_mut(g).expect("known generator") += 1;
            }
            per_metric.insert(format!("{metric}@{dataset}"), awarded);
        }
    }
    let top = totals.values().copied().max().unwrap_or(0);
    let leaders: Vec<&String> = totals.iter().filter(|(_, v)| **v == top).map(|(k, _)| k).collect();
    if leaders.len() != 1 {
        return Err(Error::Undefined(format!(
            "vote winner undefined: {} generators tied at {top} votes",
            leaders.len()
        )));
    }
    Ok(VoteTally {
        winner: leaders[0].clone(),
        per_metric_winner: per_metric,
        totals,
    })
}
