//! Isolation forest outlier filter.

use ndarray::ArrayView2;
use rand::seq::index::sample;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::seed::{self, Rng};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsolationConfig {
    pub tree_count: usize,
    pub max_samples: usize,
    /// Fraction of features each tree may split on.
    pub feature_fraction: f64,
    pub contamination: f64,
}

impl Default for IsolationConfig {
    fn default() -> Self {
        Self {
            tree_count: 100,
            max_samples: 256,
            feature_fraction: 0.30,
            contamination: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
enum INode<S: Scalar> {
    Leaf { size: usize },
    Split { feature: usize, threshold: S, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
struct ITree<S: Scalar> {
    nodes: Vec<INode<S>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct IsolationForestModel<S: Scalar> {
    trees: Vec<ITree<S>>,
    pub subsample_size: usize,
    pub features_per_tree: usize,
    pub contamination: f64,
    /// Scores at or above this are flagged on the fit set.
    pub threshold: f64,
}

/// Average unsuccessful-search path length in a binary search tree of n nodes.
pub fn average_path_length(n: usize) -> f64 {
    match n {
        0 | 1 => 0.0,
        2 => 1.0,
        _ => {
            let n = n as f64;
            2.0 * ((n - 1.0).ln() + EULER_GAMMA) - 2.0 * (n - 1.0) / n
        }
    }
}

fn grow<S: Scalar>(x: &ArrayView2<S>, rows: Vec<usize>, features: &[usize], depth: usize, limit: usize, rng: &mut Rng, nodes: &mut Vec<INode<S>>) -> usize {
    let slot = nodes.len();
    nodes.push(INode::Leaf { size: rows.len() });
    if depth >= limit || rows.len() <= 1 {
        return slot;
    }
    // Features with spread in this node.
    let spans: Vec<(usize, S, S)> = features
        .iter()
        .filter_map(|&f| {
            let (lo, hi) = rows.iter().fold((S::infinity(), S::neg_infinity()), |(lo, hi), &r| {
                (lo.min(x[[r, f]]), hi.max(x[[r, f]]))
            });
            (hi > lo).then_some((f, lo, hi))
        })
        .collect();
    if spans.is_empty() {
        return slot;
    }
    let (feature, lo, hi) = spans[rng.random_range(0..spans.len())];
    let u = S::lit(rng.random::<f64>());
    let mut threshold = lo + (hi - lo) * u;
    if threshold >= hi {
        threshold = lo;
    }
    let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| x[[i, feature]] <= threshold);
    let left = grow(x, l, features, depth + 1, limit, rng, nodes);
    let right = grow(x, r, features, depth + 1, limit, rng, nodes);
    nodes[slot] = INode::Split {
        feature,
        threshold,
        left,
        right,
    };
    slot
}

impl<S: Scalar> ITree<S> {
    fn path_length(&self, row: ndarray::ArrayView1<S>) -> f64 {
        let (mut node, mut depth) = (0, 0.0);
        loop {
            match &self.nodes[node] {
                INode::Leaf { size } => return depth + average_path_length(*size),
                INode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if row[*feature] <= *threshold { *left } else { *right };
                    depth += 1.0;
                }
            }
        }
    }
}

impl<S: Scalar> IsolationForestModel<S> {
    pub fn fit(x: &ArrayView2<S>, cfg: &IsolationConfig, seed_value: u64) -> Result<Self> {
        let (n, d) = x.dim();
        if n < 2 || d == 0 {
            return Err(Error::Precondition("isolation forest needs at least two rows and one column".into()));
        }
        let psi = cfg.max_samples.min(n);
        let features_per_tree = ((cfg.feature_fraction * d as f64).round() as usize).clamp(1, d);
        let limit = (psi as f64).log2().ceil() as usize;
        let trees = (0..cfg.tree_count.max(1))
            .map(|t| {
                let mut rng = seed::rng(seed::derive(seed_value, &[t as u64]));
                let rows = sample(&mut rng, n, psi).into_vec();
                let mut features = sample(&mut rng, d, features_per_tree).into_vec();
                features.sort_unstable();
                let mut nodes = Vec::new();
                grow(x, rows, &features, 0, limit, &mut rng, &mut nodes);
                ITree { nodes }
            })
            .collect();
        let mut model = Self {
            trees,
            subsample_size: psi,
            features_per_tree,
            contamination: cfg.contamination,
            threshold: f64::INFINITY,
        };
        let scores = model.score(x);
        let flagged = top_fraction(&scores, cfg.contamination);
        model.threshold = flagged.iter().map(|&i| scores[i]).fold(f64::INFINITY, f64::min);
        Ok(model)
    }

    /// Anomaly score 2^(−E[h(x)]/c(ψ)) in (0, 1].
    pub fn score(&self, x: &ArrayView2<S>) -> Vec<f64> {
        let c = average_path_length(self.subsample_size).max(f64::MIN_POSITIVE);
        x.rows()
            .into_iter()
            .map(|r| {
                let mean = self.trees.iter().map(|t| t.path_length(r)).sum::<f64>() / self.trees.len() as f64;
                2f64.powf(-mean / c)
            })
            .collect()
    }
}

/// Indices of the round(fraction·N) highest scores; ties go to the smaller index.
fn top_fraction(scores: &[f64], fraction: f64) -> Vec<usize> {
    let count = (fraction * scores.len() as f64).round() as usize;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut out: Vec<usize> = order.into_iter().take(count).collect();
    out.sort_unstable();
    out
}

/// `(kept rows, flagged rows)` with the top contamination share flagged.
pub fn isolation_forest_filter<S: Scalar>(x: &ArrayView2<S>, seed_value: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    isolation_forest_filter_with(x, &IsolationConfig::default(), seed_value)
}

pub fn isolation_forest_filter_with<S: Scalar>(x: &ArrayView2<S>, cfg: &IsolationConfig, seed_value: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    let model = IsolationForestModel::fit(x, cfg, seed_value)?;
    let flagged = top_fraction(&model.score(x), cfg.contamination);
    let mut is_flagged = vec![false; x.nrows()];
    for &i in &flagged {
        is_flagged[i] = true;
    }
    let kept = (0..x.nrows()).filter(|&i| !is_flagged[i]).collect();
    Ok((kept, flagged))
}
