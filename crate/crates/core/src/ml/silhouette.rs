use ndarray::{ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::linalg::{permutation, squared_distance};
use crate::scalar::Scalar;
use crate::seed;

pub const DEFAULT_SUBSAMPLE: usize = 1000;

/// Mean silhouette coefficient, computed on a seeded subsample of at most
/// `subsample` rows.
pub fn silhouette<S: Scalar>(data: &ArrayView2<S>, assignments: &[usize], subsample: usize, seed_value: u64) -> Result<f64> {
    if data.nrows() != assignments.len() {
        return Err(Error::Dimension(format!("{} rows vs {} assignments", data.nrows(), assignments.len())));
    }
    let rows: Vec<usize> = if data.nrows() <= subsample {
        (0..data.nrows()).collect()
    } else {
        let mut rng = seed::rng(seed_value);
        let mut r: Vec<usize> = permutation(data.nrows(), &mut rng).into_iter().take(subsample).collect();
        r.sort_unstable();
        r
    };
    let x = data.select(Axis(0), &rows);
    let labels: Vec<usize> = rows.iter().map(|&i| assignments[i]).collect();
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; k];
    for &l in &labels {
        sizes[l] += 1;
    }
    if sizes.iter().filter(|s| **s > 0).count() < 2 {
        return Err(Error::Undefined("silhouette needs at least two non-empty clusters".into()));
    }
    let n = x.nrows();
    let mut total = 0.0;
    let mut sums = vec![0.0; k];
    for i in 0..n {
        sums.iter_mut().for_each(|s| *s = 0.0);
        for j in 0..n {
            if i != j {
                sums[labels[j]] += squared_distance(x.row(i), x.row(j)).as_f64().sqrt();
            }
        }
        let own = labels[i];
        // Singletons score 0.
        if sizes[own] <= 1 {
            continue;
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own && sizes[c] > 0)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    Ok(total / n as f64)
}
