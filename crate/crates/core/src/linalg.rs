//! Small dense linear-algebra helpers on top of `ndarray`.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use crate::scalar::Scalar;
use crate::seed::Rng;

/// Row-major batch of samples: rows are observations, columns are features.
pub type Matrix<S> = Array2<S>;
pub type Vector<S> = Array1<S>;

pub fn standard_normal<S: Scalar>(rows: usize, cols: usize, rng: &mut Rng) -> Matrix<S> {
    Array2::from_shape_simple_fn((rows, cols), || {
        let z: f64 = StandardNormal.sample(rng);
        S::lit(z)
    })
}

pub fn uniform<S: Scalar>(rows: usize, cols: usize, lo: f64, hi: f64, rng: &mut Rng) -> Matrix<S> {
    Array2::from_shape_simple_fn((rows, cols), || S::lit(rng.random_range(lo..hi)))
}

/// Uniformly random permutation of `0..n`.
pub fn permutation(n: usize, rng: &mut Rng) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    idx
}

pub fn select_rows<S: Scalar>(m: &ArrayView2<S>, rows: &[usize]) -> Matrix<S> {
    m.select(Axis(0), rows)
}

pub fn column_means<S: Scalar>(m: &ArrayView2<S>) -> Vector<S> {
    if m.nrows() == 0 {
        return Array1::zeros(m.ncols());
    }
    m.mean_axis(Axis(0)).expect("non-empty")
}

/// Population standard deviation per column.
pub fn column_stds<S: Scalar>(m: &ArrayView2<S>) -> Vector<S> {
    if m.nrows() == 0 {
        return Array1::zeros(m.ncols());
    }
    m.std_axis(Axis(0), S::zero())
}

pub fn squared_distance<S: Scalar>(a: ArrayView1<S>, b: ArrayView1<S>) -> S {
    a.iter()
        .zip(b.iter())
        .map(|(&x, &y)| (x - y) * (x - y))
        .fold(S::zero(), |acc, v| acc + v)
}

pub fn chebyshev_distance<S: Scalar>(a: ArrayView1<S>, b: ArrayView1<S>) -> S {
    a.iter()
        .zip(b.iter())
        .map(|(&x, &y)| (x - y).abs())
        .fold(S::zero(), |acc, v| acc.max(v))
}

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
pub fn cholesky<S: Scalar>(a: &ArrayView2<S>) -> Option<Matrix<S>> {
    let n = a.nrows();
    if a.ncols() != n {
        return None;
    }
    let mut l = Array2::<S>::zeros((n, n));
    for j in 0..n {
        let mut d = a[[j, j]];
        for k in 0..j {
            d -= l[[j, k]] * l[[j, k]];
        }
        if !(d > S::zero()) || !d.is_finite() {
            return None;
        }
        let djj = d.sqrt();
        l[[j, j]] = djj;
        for i in (j + 1)..n {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = s / djj;
        }
    }
    Some(l)
}

/// Solve `L y = b` for lower-triangular `L` by forward substitution.
pub fn forward_substitute<S: Scalar>(l: &ArrayView2<S>, b: ArrayView1<S>) -> Vector<S> {
    let n = l.nrows();
    let mut y = Array1::<S>::zeros(n);
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[[i, k]] * y[k];
        }
        y[i] = s / l[[i, i]];
    }
    y
}

/// `log |A|` from its Cholesky factor.
pub fn log_det_from_cholesky<S: Scalar>(l: &ArrayView2<S>) -> S {
    (0..l.nrows()).map(|i| l[[i, i]].ln()).sum::<S>() * S::lit(2.0)
}

/// `log Σ exp(v)` computed stably.
pub fn log_sum_exp<S: Scalar>(v: &[S]) -> S {
    let m = v.iter().copied().fold(S::neg_infinity(), S::max);
    if !m.is_finite() {
        return m;
    }
    m + v.iter().map(|&x| (x - m).exp()).sum::<S>().ln()
}

pub fn all_finite<S: Scalar>(m: &ArrayView2<S>) -> bool {
    m.iter().all(|v| v.is_finite())
}
