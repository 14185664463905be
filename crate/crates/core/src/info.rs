//! Differential entropy, mutual information and information loss.
//!
//! Nearest-neighbour estimators (Kozachenko-Leonenko, KSG) serve low
//! dimensions; Gaussian-mixture plug-in estimators take over above the
//! dispatch thresholds.

use ndarray::{concatenate, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::ml::gmm::gmm_fit_bic;
use crate::scalar::{total_cmp, Scalar};
use crate::seed;

pub const DEFAULT_K: usize = 3;
pub const DEFAULT_MAX_COMPONENTS: usize = 5;
/// Highest dimension estimated with nearest neighbours.
pub const KNN_MAX_DIM: usize = 15;
/// Joint dimension from which mutual information switches to mixtures.
pub const KSG_JOINT_DIM_LIMIT: usize = 20;
const JITTER: f64 = 1e-10;
const JITTER_SEED: u64 = 0x6a17;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntropyMethod {
    Knn,
    Gmm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct EntropyEstimate<S: Scalar> {
    /// Nats.
    pub value: S,
    pub method: EntropyMethod,
    /// Neighbour count for kNN, selected component count for GMM.
    pub k_or_components: usize,
    /// Duplicate points were perturbed before estimating.
    pub jittered: bool,
}

/// Digamma function: recurrence up to x ≥ 6, then the asymptotic series.
pub fn digamma<S: Scalar>(x: S) -> S {
    let mut x = x;
    let mut acc = S::zero();
    if x <= S::zero() && x == x.floor() {
        return S::nan();
    }
    if x < S::zero() {
        // Reflection.
        let pi = S::PI();
        return digamma(S::one() - x) - pi / (pi * x).tan();
    }
    while x < S::lit(6.0) {
        acc -= S::one() / x;
        x += S::one();
    }
    let inv = S::one() / x;
    let inv2 = inv * inv;
    let series = inv2
        * (S::lit(1.0 / 12.0)
            - inv2
                * (S::lit(1.0 / 120.0)
                    - inv2 * (S::lit(1.0 / 252.0) - inv2 * (S::lit(1.0 / 240.0) - inv2 * S::lit(1.0 / 132.0)))));
    acc + x.ln() - S::lit(0.5) * inv - series
}

/// ln Γ(d/2 + 1) by the half-integer recurrence (exact up to rounding).
fn ln_gamma_half_plus_one(d: usize) -> f64 {
    // Γ(d/2 + 1) = Π_{j} (d/2 − j) down to Γ(1) = 1 or Γ(1/2) = √π.
    let mut acc = 0.0;
    let mut x = d as f64 / 2.0;
    while x > 0.25 {
        acc += x.ln();
        x -= 1.0;
    }
    if d % 2 == 1 {
        acc += 0.5 * std::f64::consts::PI.ln();
    }
    acc
}

/// ln of the volume of the d-dimensional Euclidean unit ball, π^(d/2)/Γ(d/2+1).
pub fn log_unit_ball_volume<S: Scalar>(d: usize) -> S {
    S::lit(d as f64 / 2.0 * std::f64::consts::PI.ln() - ln_gamma_half_plus_one(d))
}

/// Distance from each row to its k-th nearest other row.
fn kth_neighbour_distances<S: Scalar>(x: &ArrayView2<S>, k: usize, chebyshev: bool) -> Vec<S> {
    let n = x.nrows();
    if x.ncols() == 1 {
        return kth_neighbour_1d(&x.column(0).to_vec(), k);
    }
    let mut out = Vec::with_capacity(n);
    let mut best: Vec<S> = Vec::with_capacity(k + 1);
    for i in 0..n {
        best.clear();
        let xi = x.row(i);
        for j in 0..n {
            if i == j {
                continue;
            }
            let d = if chebyshev {
                linalg::chebyshev_distance(xi, x.row(j))
            } else {
                linalg::squared_distance(xi, x.row(j))
            };
            if best.len() < k {
                let pos = best.partition_point(|v| *v <= d);
                best.insert(pos, d);
            } else if d < best[k - 1] {
                best.pop();
                let pos = best.partition_point(|v| *v <= d);
                best.insert(pos, d);
            }
        }
        let d = best[k - 1];
        out.push(if chebyshev { d } else { d.sqrt() });
    }
    out
}

/// Exact k-th neighbour distance on the line via sorting.
fn kth_neighbour_1d<S: Scalar>(values: &[S], k: usize) -> Vec<S> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| total_cmp(&values[a], &values[b]));
    let sorted: Vec<S> = order.iter().map(|&i| values[i]).collect();
    let mut out = vec![S::zero(); n];
    for (pos, &orig) in order.iter().enumerate() {
        let v = sorted[pos];
        // Merge outward from pos, taking k steps.
        let (mut lo, mut hi) = (pos, pos);
        let mut d = S::zero();
        for _ in 0..k {
            let left = if lo > 0 { Some(v - sorted[lo - 1]) } else { None };
            let right = if hi + 1 < n { Some(sorted[hi + 1] - v) } else { None };
            match (left, right) {
                (Some(l), Some(r)) if l <= r => {
                    d = l;
                    lo -= 1;
                }
                (Some(l), None) => {
                    d = l;
                    lo -= 1;
                }
                (_, Some(r)) => {
                    d = r;
                    hi += 1;
                }
                (None, None) => break,
            }
        }
        out[orig] = d;
    }
    out
}

fn jitter<S: Scalar>(x: &ArrayView2<S>, seed_value: u64) -> Matrix<S> {
    let mut rng = seed::rng(seed_value);
    x + &linalg::uniform::<S>(x.nrows(), x.ncols(), -JITTER, JITTER, &mut rng)
}

/// Kozachenko-Leonenko entropy with Euclidean k-th neighbour radii.
pub fn entropy_knn<S: Scalar>(sample: &ArrayView2<S>, k: usize) -> Result<EntropyEstimate<S>> {
    entropy_knn_seeded(sample, k, JITTER_SEED)
}

pub fn entropy_knn_seeded<S: Scalar>(sample: &ArrayView2<S>, k: usize, jitter_seed: u64) -> Result<EntropyEstimate<S>> {
    let (n, d) = sample.dim();
    if k == 0 || n < k + 1 {
        return Err(Error::Precondition(format!("kNN entropy needs k >= 1 and N >= k+1 (N={n}, k={k})")));
    }
    if d == 0 {
        return Err(Error::Dimension("entropy of a zero-width sample".into()));
    }
    let mut eps = kth_neighbour_distances(sample, k, false);
    let mut jittered = false;
    if eps.iter().any(|e| *e <= S::zero()) {
        log::warn!("duplicate points in entropy sample; applying jitter of {JITTER}");
        let perturbed = jitter(sample, jitter_seed);
        eps = kth_neighbour_distances(&perturbed.view(), k, false);
        jittered = true;
    }
    let nn = S::from_usize_lossy(n);
    let sum_log: S = eps.iter().map(|e| e.max(S::min_positive_value()).ln()).sum();
    let value = digamma(nn) - digamma(S::from_usize_lossy(k))
        + log_unit_ball_volume::<S>(d)
        + S::from_usize_lossy(d) * sum_log / nn;
    Ok(EntropyEstimate {
        value,
        method: EntropyMethod::Knn,
        k_or_components: k,
        jittered,
    })
}

/// Plug-in entropy −mean log p̂(x) under a BIC-selected mixture.
pub fn entropy_gmm<S: Scalar>(sample: &ArrayView2<S>, max_components: usize, seed_value: u64) -> Result<EntropyEstimate<S>> {
    let model = gmm_fit_bic(sample, max_components, seed_value)?;
    Ok(EntropyEstimate {
        value: -model.mean_log_density(sample)?,
        method: EntropyMethod::Gmm,
        k_or_components: model.components(),
        jittered: false,
    })
}

/// kNN up to [`KNN_MAX_DIM`] columns, mixture plug-in above.
pub fn entropy<S: Scalar>(sample: &ArrayView2<S>, seed_value: u64) -> Result<EntropyEstimate<S>> {
    if sample.ncols() <= KNN_MAX_DIM {
        entropy_knn_seeded(sample, DEFAULT_K, seed::derive(seed_value, &[JITTER_SEED]))
    } else {
        entropy_gmm(sample, DEFAULT_MAX_COMPONENTS, seed_value)
    }
}

/// Count of entries strictly closer than `radius` to entry `i` (excluding i).
fn count_within<S: Scalar>(x: &ArrayView2<S>, sorted_1d: Option<&[S]>, i: usize, radius: S) -> usize {
    if let Some(sorted) = sorted_1d {
        let v = x[[i, 0]];
        let lo = sorted.partition_point(|s| *s <= v - radius);
        let hi = sorted.partition_point(|s| *s < v + radius);
        // Strictness at the edges: values at exactly v ± radius are excluded.
        return (hi - lo).saturating_sub(1);
    }
    let xi = x.row(i);
    (0..x.nrows())
        .filter(|&j| j != i && linalg::chebyshev_distance(xi, x.row(j)) < radius)
        .count()
}

/// Kraskov–Stögbauer–Grassberger estimator (first variant).
pub fn mutual_info_ksg<S: Scalar>(x: &ArrayView2<S>, z: &ArrayView2<S>, k: usize) -> Result<S> {
    let n = x.nrows();
    if z.nrows() != n {
        return Err(Error::Dimension(format!("x has {n} rows, z has {}", z.nrows())));
    }
    if k == 0 || n < k + 1 {
        return Err(Error::Precondition(format!("KSG needs k >= 1 and N >= k+1 (N={n}, k={k})")));
    }
    let mut joint = concatenate(Axis(1), &[x.view(), z.view()]).map_err(|e| Error::Dimension(e.to_string()))?;
    let mut eps = kth_neighbour_distances(&joint.view(), k, true);
    let (mut xs, mut zs) = (x.to_owned(), z.to_owned());
    if eps.iter().any(|e| *e <= S::zero()) {
        log::warn!("duplicate points in KSG sample; applying jitter of {JITTER}");
        joint = jitter(&joint.view(), JITTER_SEED);
        xs = joint.slice(ndarray::s![.., ..x.ncols()]).to_owned();
        zs = joint.slice(ndarray::s![.., x.ncols()..]).to_owned();
        eps = kth_neighbour_distances(&joint.view(), k, true);
    }
    let sorted = |m: &Matrix<S>| -> Option<Vec<S>> {
        (m.ncols() == 1).then(|| {
            let mut v = m.column(0).to_vec();
            v.sort_by(total_cmp);
            v
        })
    };
    let (sx, sz) = (sorted(&xs), sorted(&zs));
    let mut acc = S::zero();
    for i in 0..n {
        let nx = count_within(&xs.view(), sx.as_deref(), i, eps[i]);
        let nz = count_within(&zs.view(), sz.as_deref(), i, eps[i]);
        acc += digamma(S::from_usize_lossy(nx + 1)) + digamma(S::from_usize_lossy(nz + 1));
    }
    let nn = S::from_usize_lossy(n);
    Ok(digamma(S::from_usize_lossy(k)) + digamma(nn) - acc / nn)
}

/// Mixture plug-in MI, mean of log p(x,z) − log p(x) − log p(z).
pub fn mutual_info_gmm<S: Scalar>(x: &ArrayView2<S>, z: &ArrayView2<S>, seed_value: u64) -> Result<S> {
    if x.nrows() != z.nrows() {
        return Err(Error::Dimension(format!("x has {} rows, z has {}", x.nrows(), z.nrows())));
    }
    if x.nrows() < 2 {
        return Err(Error::Precondition("mixture MI needs at least two rows".into()));
    }
    let joint = concatenate(Axis(1), &[x.view(), z.view()]).map_err(|e| Error::Dimension(e.to_string()))?;
    let max_k = DEFAULT_MAX_COMPONENTS.min(x.nrows() / 2);
    let pj = gmm_fit_bic(&joint.view(), max_k, seed::derive(seed_value, &[0]))?;
    let px = gmm_fit_bic(x, max_k, seed::derive(seed_value, &[1]))?;
    let pz = gmm_fit_bic(z, max_k, seed::derive(seed_value, &[2]))?;
    let lj = pj.log_density(&joint.view())?;
    let lx = px.log_density(x)?;
    let lz = pz.log_density(z)?;
    Ok(((&lj - &lx) - &lz).mean().unwrap_or(S::nan()))
}

/// KSG below a joint dimension of [`KSG_JOINT_DIM_LIMIT`], mixtures above.
pub fn mutual_info<S: Scalar>(x: &ArrayView2<S>, z: &ArrayView2<S>, seed_value: u64) -> Result<S> {
    if x.ncols() + z.ncols() < KSG_JOINT_DIM_LIMIT {
        mutual_info_ksg(x, z, DEFAULT_K)
    } else {
        mutual_info_gmm(x, z, seed_value)
    }
}

/// |H(X) − H(Z)|.
pub fn info_loss<S: Scalar>(hx: &EntropyEstimate<S>, hz: &EntropyEstimate<S>) -> S {
    (hx.value - hz.value).abs()
}
