use ndarray::{Array1, Array2, ArrayView2};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{squared_distance, Matrix};
use crate::scalar::Scalar;
use crate::seed::{self, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub n_init: usize,
    pub max_iter: usize,
    /// Stop once no centroid moves further than this (Euclidean).
    pub tol: f64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            n_init: 3,
            max_iter: 50,
            tol: 1e-2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct KMeansModel<S: Scalar> {
    pub centroids: Matrix<S>,
    pub assignments: Vec<usize>,
    pub inertia: S,
    /// Inertia after each Lloyd iteration of the winning run.
    pub inertia_history: Vec<S>,
}

impl<S: Scalar> KMeansModel<S> {
    pub fn k(&self) -> usize {
        self.centroids.nrows()
    }

    pub fn predict(&self, data: &ArrayView2<S>) -> Vec<usize> {
        data.rows()
            .into_iter()
            .map(|r| nearest(&self.centroids.view(), r).0)
            .collect()
    }
}

fn nearest<S: Scalar>(centroids: &ArrayView2<S>, row: ndarray::ArrayView1<S>) -> (usize, S) {
    let mut best = (0, S::infinity());
    for (c, centroid) in centroids.rows().into_iter().enumerate() {
        let d = squared_distance(row, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// k-means++ seeding: first centre uniform, the rest proportional to squared distance.
pub fn kmeans_plus_plus<S: Scalar>(data: &ArrayView2<S>, k: usize, rng: &mut Rng) -> Matrix<S> {
    let n = data.nrows();
    let mut centroids = Array2::zeros((k, data.ncols()));
    let first = rng.random_range(0..n);
    centroids.row_mut(0).assign(&data.row(first));
    let mut d2: Vec<f64> = data
        .rows()
        .into_iter()
        .map(|r| squared_distance(r, data.row(first)).as_f64())
        .collect();
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centroids.row_mut(c).assign(&data.row(pick));
        for (i, r) in data.rows().into_iter().enumerate() {
            let d = squared_distance(r, data.row(pick)).as_f64();
            if d < d2[i] {
                d2[i] = d;
            }
        }
    }
    centroids
}

fn lloyd<S: Scalar>(data: &ArrayView2<S>, k: usize, cfg: &KMeansConfig, rng: &mut Rng) -> KMeansModel<S> {
    let mut centroids = kmeans_plus_plus(data, k, rng);
    let mut assignments = vec![0; data.nrows()];
    let mut history = Vec::new();
    let mut inertia = S::zero();
    for _ in 0..cfg.max_iter.max(1) {
        inertia = S::zero();
        for (i, r) in data.rows().into_iter().enumerate() {
            let (c, d) = nearest(&centroids.view(), r);
            assignments[i] = c;
            inertia += d;
        }
        history.push(inertia);

        let mut sums = Array2::<S>::zeros(centroids.raw_dim());
        let mut counts = vec![0usize; k];
        for (i, r) in data.rows().into_iter().enumerate() {
            let mut row = sums.row_mut(assignments[i]);
            row += &r;
            counts[assignments[i]] += 1;
        }
        let mut shift = S::zero();
        for c in 0..k {
            // An empty cluster keeps its previous centroid.
            if counts[c] == 0 {
                continue;
            }
            let new: Array1<S> = sums.row(c).mapv(|v| v / S::from_usize_lossy(counts[c]));
            shift = shift.max(squared_distance(new.view(), centroids.row(c)).sqrt());
            centroids.row_mut(c).assign(&new);
        }
        if shift.as_f64() < cfg.tol {
            break;
        }
    }
    // Final assignment against the last centroids.
    let mut final_inertia = S::zero();
    for (i, r) in data.rows().into_iter().enumerate() {
        let (c, d) = nearest(&centroids.view(), r);
        assignments[i] = c;
        final_inertia += d;
    }
    if final_inertia != inertia {
        history.push(final_inertia);
    }
    KMeansModel {
        centroids,
        assignments,
        inertia: final_inertia,
        inertia_history: history,
    }
}

pub fn kmeans_fit<S: Scalar>(data: &ArrayView2<S>, k: usize, seed_value: u64) -> Result<KMeansModel<S>> {
    kmeans_fit_with(data, k, seed_value, &KMeansConfig::default())
}

pub fn kmeans_fit_with<S: Scalar>(
    data: &ArrayView2<S>,
    k: usize,
    seed_value: u64,
    cfg: &KMeansConfig,
) -> Result<KMeansModel<S>> {
    if k == 0 || k > data.nrows() {
        return Err(Error::Precondition(format!(
            "k-means needs 1 <= k <= N, got k={k}, N={}",
            data.nrows()
        )));
    }
    let mut best: Option<KMeansModel<S>> = None;
    for run in 0..cfg.n_init.max(1) {
        let mut rng = seed::rng(seed::derive(seed_value, &[run as u64]));
        let model = lloyd(data, k, cfg, &mut rng);
        if best.as_ref().is_none_or(|b| model.inertia < b.inertia) {
            best = Some(model);
        }
    }
    Ok(best.expect("at least one run"))
}

/// Number of points assigned to each cluster.
pub fn cluster_sizes(assignments: &[usize], k: usize) -> Vec<usize> {
    let mut counts = vec![0; k];
    for &a in assignments {
        counts[a] += 1;
    }
    counts
}
