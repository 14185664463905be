use ndarray::{Array1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::{median, quantile, Scalar};

/// Median imputation followed by median/IQR scaling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct RobustPreprocessor<S: Scalar> {
    pub medians: Array1<S>,
    /// Interquartile range per column, 1 where it is zero.
    pub scales: Array1<S>,
}

impl<S: Scalar> RobustPreprocessor<S> {
    pub fn fit(x: &ArrayView2<S>) -> Result<Self> {
        if x.nrows() == 0 {
            return Err(Error::Precondition("cannot fit a scaler on zero rows".into()));
        }
        let mut medians = Array1::zeros(x.ncols());
        let mut scales = Array1::ones(x.ncols());
        for (j, col) in x.columns().into_iter().enumerate() {
            let present: Vec<S> = col.iter().copied().filter(|v| !v.is_nan()).collect();
            let med = median(&present).unwrap_or(S::zero());
            medians[j] = med;
            let iqr = match (quantile(&present, 0.75), quantile(&present, 0.25)) {
                (Some(hi), Some(lo)) => hi - lo,
                _ => S::zero(),
            };
            if iqr > S::zero() {
                scales[j] = iqr;
            }
        }
        Ok(Self { medians, scales })
    }

    pub fn transform(&self, x: &ArrayView2<S>) -> Result<Matrix<S>> {
        if x.ncols() != self.medians.len() {
            return Err(Error::Dimension(format!("scaler fitted on {} columns, got {}", self.medians.len(), x.ncols())));
        }
        let mut out = x.to_owned();
        for (j, mut col) in out.columns_mut().into_iter().enumerate() {
            let (m, s) = (self.medians[j], self.scales[j]);
            col.mapv_inplace(|v| if v.is_nan() { S::zero() } else { (v - m) / s });
        }
        Ok(out)
    }
}
