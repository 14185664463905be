//! TOPSIS ranking of sweep alternatives.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Larger is better.
    Benefit,
    /// Smaller is better.
    Cost,
}

impl FromStr for Direction {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "benefit" | "b" | "max" => Ok(Direction::Benefit),
            "cost" | "c" | "min" => Ok(Direction::Cost),
            other => Err(Error::Config(format!("unknown criterion direction `{other}`"))),
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Benefit => "benefit",
            Direction::Cost => "cost",
        })
    }
}

/// Criteria of a latent-size sweep, in column order.
pub const SWEEP_CRITERIA: [&str; 4] = ["m", "rmse", "mutual_info", "info_loss"];

/// Default directions for the sweep criteria: every criterion is a cost.
pub fn default_sweep_directions() -> Vec<Direction> {
    vec![Direction::Cost; SWEEP_CRITERIA.len()]
}

/// Directions that treat mutual information as a benefit.
pub fn mi_benefit_sweep_directions() -> Vec<Direction> {
    vec![Direction::Cost, Direction::Cost, Direction::Benefit, Direction::Cost]
}

pub fn equal_weights<S: Scalar>(n: usize) -> Vec<S> {
    vec![S::one() / S::from_usize_lossy(n); n]
}

/// Every intermediate quantity of one TOPSIS evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct TopsisDecision<S: Scalar> {
    pub decision_matrix: Array2<S>,
    pub weights: Vec<S>,
    pub directions: Vec<Direction>,
    pub normalized: Array2<S>,
    pub weighted: Array2<S>,
    pub ideal: Vec<S>,
    pub anti_ideal: Vec<S>,
    pub distance_to_ideal: Vec<S>,
    pub distance_to_anti_ideal: Vec<S>,
    pub closeness: Vec<S>,
    /// Alternative indices by descending closeness, ties to the smaller index.
    pub ranking: Vec<usize>,
}

impl<S: Scalar> TopsisDecision<S> {
    pub fn best(&self) -> usize {
        self.ranking[0]
    }

    /// `(alternative index, closeness)` in rank order.
    pub fn ranked(&self) -> Vec<(usize, S)> {
        self.ranking.iter().map(|&i| (i, self.closeness[i])).collect()
    }
}

/// Runs TOPSIS on an `alternatives × criteria` matrix. Weights are
/// renormalised to sum to one.
pub fn rank<S: Scalar>(matrix: &ArrayView2<S>, weights: &[S], directions: &[Direction]) -> Result<TopsisDecision<S>> {
    let (m, n) = matrix.dim();
    if m == 0 || n == 0 {
        return Err(Error::Precondition("TOPSIS needs at least one alternative and criterion".into()));
    }
    if weights.len() != n || directions.len() != n {
        return Err(Error::Dimension(format!(
            "{n} criteria but {} weights and {} directions",
            weights.len(),
            directions.len()
        )));
    }
    if weights.iter().any(|w| !(*w >= S::zero()) || !w.is_finite()) {
        return Err(Error::Precondition("weights must be finite and non-negative".into()));
    }
    let total: S = weights.iter().copied().sum();
    if !(total > S::zero()) {
        return Err(Error::Precondition("weights must not all be zero".into()));
    }
    let weights: Vec<S> = weights.iter().map(|w| *w / total).collect();

    let norms: Array1<S> = matrix.map_axis(Axis(0), |c| c.iter().map(|v| *v * *v).sum::<S>().sqrt());
    if let Some(j) = norms.iter().position(|v| !(*v > S::zero())) {
        return Err(Error::Normalization { criterion: j });
    }
    let normalized = matrix / &norms;
    let weighted = &normalized * &Array1::from(weights.clone());

    let (mut ideal, mut anti) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for (j, col) in weighted.axis_iter(Axis(1)).enumerate() {
        let max = col.iter().copied().fold(S::neg_infinity(), S::max);
        let min = col.iter().copied().fold(S::infinity(), S::min);
        match directions[j] {
            Direction::Benefit => {
                ideal.push(max);
                anti.push(min);
            }
            Direction::Cost => {
                ideal.push(min);
                anti.push(max);
            }
        }
    }
    let dist = |row: ndarray::ArrayView1<S>, target: &[S]| -> S {
        row.iter()
            .zip(target)
            .map(|(a, b)| (*a - *b) * (*a - *b))
            .sum::<S>()
            .sqrt()
    };
    let d_plus: Vec<S> = weighted.rows().into_iter().map(|r| dist(r, &ideal)).collect();
    let d_minus: Vec<S> = weighted.rows().into_iter().map(|r| dist(r, &anti)).collect();
    let closeness: Vec<S> = d_plus
        .iter()
        .zip(&d_minus)
        .map(|(p, q)| {
            let denom = *p + *q;
            // Every alternative identical: all equally close.
            if denom > S::zero() {
                *q / denom
            } else {
                S::lit(0.5)
            }
        })
        .collect();
    let mut ranking: Vec<usize> = (0..m).collect();
    ranking.sort_by(|&a, &b| {
        closeness[b]
            .partial_cmp(&closeness[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    Ok(TopsisDecision {
        decision_matrix: matrix.to_owned(),
        weights,
        directions: directions.to_vec(),
        normalized,
        weighted,
        ideal,
        anti_ideal: anti,
        distance_to_ideal: d_plus,
        distance_to_anti_ideal: d_minus,
        closeness,
        ranking,
    })
}
