//! CART decision tree with Gini impurity and sample weights.

use ndarray::ArrayView2;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{total_cmp, Scalar};
use crate::seed::{self, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    All,
    Sqrt,
    Count(usize),
}

impl MaxFeatures {
    pub fn resolve(self, n_features: usize) -> usize {
        let k = match self {
            MaxFeatures::All => n_features,
            MaxFeatures::Sqrt => (n_features as f64).sqrt().floor() as usize,
            MaxFeatures::Count(k) => k,
        };
        k.clamp(1, n_features.max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeConfig {
    /// None grows until leaves are pure or unsplittable.
    pub max_depth: Option<usize>,
    pub max_features: MaxFeatures,
    pub min_samples_split: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self {
            max_depth: None,
            max_features: MaxFeatures::All,
            min_samples_split: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub enum Node<S: Scalar> {
    Leaf {
        /// Weighted class frequencies, summing to one.
        distribution: Vec<f64>,
        n_samples: usize,
    },
    Split {
        feature: usize,
        /// Rows with `x[feature] <= threshold` go left.
        threshold: S,
        /// Weighted Gini impurity of the node before splitting.
        impurity: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct DecisionTree<S: Scalar> {
    pub nodes: Vec<Node<S>>,
    pub n_classes: usize,
    pub n_features: usize,
}

fn gini(counts: &[f64], total: f64) -> f64 {
    if total <= 0.0 {
        return 0.0;
    }
    1.0 - counts.iter().map(|c| (c / total) * (c / total)).sum::<f64>()
}

struct Builder<'a, S: Scalar> {
    x: &'a ArrayView2<'a, S>,
    y: &'a [usize],
    w: &'a [f64],
    n_classes: usize,
    cfg: TreeConfig,
    rng: Rng,
    nodes: Vec<Node<S>>,
}

impl<S: Scalar> Builder<'_, S> {
    fn leaf(&mut self, idx: &[usize], counts: Vec<f64>, total: f64) -> usize {
        let distribution = if total > 0.0 {
            counts.iter().map(|c| c / total).collect()
        } else {
            // Zero total weight: fall back to raw counts.
            let mut raw = vec![0.0; self.n_classes];
            for &i in idx {
                raw[self.y[i]] += 1.0;
            }
            let n = idx.len().max(1) as f64;
            raw.iter().map(|c| c / n).collect()
        };
        self.nodes.push(Node::Leaf {
            distribution,
            n_samples: idx.len(),
        });
        self.nodes.len() - 1
    }

    /// Best (gain, threshold) for one feature over `idx`.
    fn best_split_on(&self, idx: &mut [usize], feature: usize, counts: &[f64], total: f64, parent: f64) -> Option<(f64, S)> {
        idx.sort_by(|&a, &b| total_cmp(&self.x[[a, feature]], &self.x[[b, feature]]));
        let mut left = vec![0.0; self.n_classes];
        let mut left_w = 0.0;
        let mut best: Option<(f64, S)> = None;
        for pos in 0..idx.len() - 1 {
            let i = idx[pos];
            left[self.y[i]] += self.w[i];
            left_w += self.w[i];
            let (v, next) = (self.x[[i, feature]], self.x[[idx[pos + 1], feature]]);
            if !(next > v) {
                continue;
            }
            let right_w = total - left_w;
            let (mut sl, mut sr) = (0.0, 0.0);
            for (c, l) in counts.iter().zip(&left) {
                sl += l * l;
                sr += (c - l) * (c - l);
            }
            // w·gini(w) = w − Σ c²/w
            let wl = if left_w > 0.0 { left_w - sl / left_w } else { 0.0 };
            let wr = if right_w > 0.0 { right_w - sr / right_w } else { 0.0 };
            let child = (wl + wr) / total;
            let gain = parent - child;
            if best.is_none_or(|(g, _)| gain > g + 1e-15) {
                let mut threshold = (v + next) / S::lit(2.0);
                // Midpoint can round up to `next` for adjacent floats.
                if !(threshold < next) {
                    threshold = v;
                }
                best = Some((gain, threshold));
            }
        }
        best
    }

    fn build(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let mut counts = vec![0.0; self.n_classes];
        for &i in &idx {
            counts[self.y[i]] += self.w[i];
        }
        let total: f64 = counts.iter().sum();
        let impurity = gini(&counts, total);
        let depth_ok = self.cfg.max_depth.is_none_or(|d| depth < d);
        if impurity <= 0.0 || !depth_ok || idx.len() < self.cfg.min_samples_split.max(2) || total <= 0.0 {
            return self.leaf(&idx, counts, total);
        }

        let n_features = self.x.ncols();
        let mut order: Vec<usize> = (0..n_features).collect();
        order.shuffle(&mut self.rng);
        let k = self.cfg.max_features.resolve(n_features);
        let mut best: Option<(f64, usize, S)> = None;
        let mut scratch = idx.clone();
        for (visited, &f) in order.iter().enumerate() {
            // Like common CART implementations, keep drawing features past
            // the budget until at least one valid split is found.
            if visited >= k && best.is_some() {
                break;
            }
            if let Some((gain, thr)) = self.best_split_on(&mut scratch, f, &counts, total, impurity) {
                if best.is_none_or(|(g, _, _)| gain > g + 1e-15) {
                    best = Some((gain, f, thr));
                }
            }
        }
        let Some((_, feature, threshold)) = best else {
            return self.leaf(&idx, counts, total);
        };
        let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| self.x[[i, feature]] <= threshold);
        let slot = self.nodes.len();
        self.nodes.push(Node::Leaf {
            distribution: Vec::new(),
            n_samples: 0,
        });
        let left = self.build(l, depth + 1);
        let right = self.build(r, depth + 1);
        self.nodes[slot] = Node::Split {
            feature,
            threshold,
            impurity,
            left,
            right,
        };
        slot
    }
}

impl<S: Scalar> DecisionTree<S> {
    /// Fits on `rows` of `x` (with repetition allowed, as in a bootstrap).
    pub fn fit_rows(
        x: &ArrayView2<S>,
        y: &[usize],
        weights: &[f64],
        rows: Vec<usize>,
        n_classes: usize,
        cfg: TreeConfig,
        seed_value: u64,
    ) -> Result<Self> {
        if x.nrows() != y.len() || y.len() != weights.len() {
            return Err(Error::Dimension(format!(
                "{} rows, {} labels, {} weights",
                x.nrows(),
                y.len(),
                weights.len()
            )));
        }
        if rows.is_empty() {
            return Err(Error::Precondition("cannot fit a tree on zero rows".into()));
        }
        if let Some(bad) = y.iter().find(|&&c| c >= n_classes) {
            return Err(Error::Precondition(format!("label {bad} outside 0..{n_classes}")));
        }
        let mut b = Builder {
            x,
            y,
            w: weights,
            n_classes,
            cfg,
            rng: seed::rng(seed_value),
            nodes: Vec::new(),
        };
        b.build(rows, 0);
        Ok(Self {
            nodes: b.nodes,
            n_classes,
            n_features: x.ncols(),
        })
    }

    pub fn fit(x: &ArrayView2<S>, y: &[usize], weights: Option<&[f64]>, n_classes: usize, cfg: TreeConfig, seed_value: u64) -> Result<Self> {
        let ones;
        let w = match weights {
            Some(w) => w,
            None => {
                ones = vec![1.0; y.len()];
                &ones
            }
        };
        Self::fit_rows(x, y, w, (0..x.nrows()).collect(), n_classes, cfg, seed_value)
    }

    fn leaf_for(&self, row: ndarray::ArrayView1<S>) -> &[f64] {
        let mut node = 0;
        loop {
            match &self.nodes[node] {
                Node::Leaf { distribution, .. } => return distribution,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => node = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn predict_proba(&self, x: &ArrayView2<S>) -> ndarray::Array2<f64> {
        let mut out = ndarray::Array2::zeros((x.nrows(), self.n_classes));
        for (i, r) in x.rows().into_iter().enumerate() {
            for (c, p) in self.leaf_for(r).iter().enumerate() {
                out[[i, c]] = *p;
            }
        }
        out
    }

    pub fn predict(&self, x: &ArrayView2<S>) -> Vec<usize> {
        argmax_rows(&self.predict_proba(x))
    }

    pub fn depth(&self) -> usize {
        fn walk<S: Scalar>(t: &DecisionTree<S>, n: usize) -> usize {
            match &t.nodes[n] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(t, *left).max(walk(t, *right)),
            }
        }
        walk(self, 0)
    }

    pub fn leaves(&self) -> impl Iterator<Item = (&[f64], usize)> {
        self.nodes.iter().filter_map(|n| match n {
            Node::Leaf { distribution, n_samples } => Some((distribution.as_slice(), *n_samples)),
            _ => None,
        })
    }
}

/// Index of the largest entry per row; ties go to the smaller index.
pub fn argmax_rows(p: &ndarray::Array2<f64>) -> Vec<usize> {
    p.rows()
        .into_iter()
        .map(|r| {
            let mut best = 0;
            for (c, v) in r.iter().enumerate() {
                if *v > r[best] {
                    best = c;
                }
            }
            best
        })
        .collect()
}
