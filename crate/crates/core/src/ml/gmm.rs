use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::kmeans::kmeans_plus_plus;
use crate::error::{Error, Result};
use crate::linalg::{cholesky, forward_substitute, log_det_from_cholesky, log_sum_exp, Matrix};
use crate::scalar::Scalar;
use crate::seed;

pub const RIDGE: f64 = 1e-6;
pub const MAX_ITER: usize = 200;
pub const REL_TOL: f64 = 1e-6;

/// Full-covariance Gaussian mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct GmmModel<S: Scalar> {
    pub weights: Vec<S>,
    /// One mean per row.
    pub means: Matrix<S>,
    pub covariances: Vec<Matrix<S>>,
    /// Total training log-likelihood at the final parameters.
    pub log_likelihood: S,
    pub bic: S,
    /// Training log-likelihood after each EM iteration.
    pub log_likelihood_history: Vec<S>,
    pub n_train: usize,
}

struct Factored<S: Scalar> {
    chol: Vec<Matrix<S>>,
    log_norm: Vec<S>,
}

impl<S: Scalar> GmmModel<S> {
    pub fn components(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.means.ncols()
    }

    /// Free parameters: K·(d + d(d+1)/2) + (K − 1).
    pub fn parameter_count(k: usize, d: usize) -> usize {
        k * (d + d * (d + 1) / 2) + k - 1
    }

    fn factor(&self) -> Result<Factored<S>> {
        let d = S::from_usize_lossy(self.dim());
        let half = S::lit(0.5);
        let ln_2pi = (S::lit(2.0) * S::PI()).ln();
        let mut chol = Vec::with_capacity(self.components());
        let mut log_norm = Vec::with_capacity(self.components());
        for (k, cov) in self.covariances.iter().enumerate() {
            let l = cholesky(&cov.view()).ok_or(Error::SingularCovariance { component: k })?;
            log_norm.push(self.weights[k].ln() - half * (d * ln_2pi + log_det_from_cholesky(&l.view())));
            chol.push(l);
        }
        Ok(Factored { chol, log_norm })
    }

    /// `log α_k + log N(x_i | μ_k, Σ_k)` for every row and component.
    fn weighted_log_densities(&self, f: &Factored<S>, data: &ArrayView2<S>) -> Array2<S> {
        let half = S::lit(0.5);
        let mut out = Array2::zeros((data.nrows(), self.components()));
        for k in 0..self.components() {
            let mu = self.means.row(k);
            for (i, x) in data.rows().into_iter().enumerate() {
                let diff: Array1<S> = &x - &mu;
                let y = forward_substitute(&f.chol[k].view(), diff.view());
                out[[i, k]] = f.log_norm[k] - half * y.dot(&y);
            }
        }
        out
    }

    /// Log-density of every row under the mixture.
    pub fn log_density(&self, data: &ArrayView2<S>) -> Result<Array1<S>> {
        if data.ncols() != self.dim() {
            return Err(Error::Dimension(format!(
                "mixture has dimension {}, data has {} columns",
                self.dim(),
                data.ncols()
            )));
        }
        let f = self.factor()?;
        let w = self.weighted_log_densities(&f, data);
        Ok(w.rows().into_iter().map(|r| log_sum_exp(&r.to_vec())).collect())
    }

    pub fn mean_log_density(&self, data: &ArrayView2<S>) -> Result<S> {
        let ld = self.log_density(data)?;
        Ok(ld.mean().unwrap_or(S::nan()))
    }

    /// Draws `count` rows from the mixture.
    pub fn sample(&self, count: usize, seed_value: u64) -> Result<Matrix<S>> {
        use rand::Rng as _;
        let f = self.factor()?;
        let mut rng = seed::rng(seed_value);
        let z = crate::linalg::standard_normal::<S>(count, self.dim(), &mut rng);
        let mut out = Array2::zeros((count, self.dim()));
        for i in 0..count {
            let mut u = rng.random::<f64>();
            let mut k = self.components() - 1;
            for (j, w) in self.weights.iter().enumerate() {
                if u < w.as_f64() {
                    k = j;
                    break;
                }
                u -= w.as_f64();
            }
            let x = f.chol[k].dot(&z.row(i)) + self.means.row(k);
            out.row_mut(i).assign(&x);
        }
        Ok(out)
    }
}

fn covariance<S: Scalar>(data: &ArrayView2<S>, resp: ArrayView1<S>, mean: ArrayView1<S>, nk: S) -> Matrix<S> {
    let d = data.ncols();
    let centred = data - &mean;
    let weighted = &centred * &resp.insert_axis(Axis(1));
    let mut cov = weighted.t().dot(&centred) / nk;
    for j in 0..d {
        cov[[j, j]] += S::lit(RIDGE);
    }
    cov
}

/// EM for a fixed component count, initialised by k-means++ seeding.
pub fn gmm_fit<S: Scalar>(data: &ArrayView2<S>, k: usize, seed_value: u64) -> Result<GmmModel<S>> {
    let (n, d) = data.dim();
    if k == 0 || n < 2 * k {
        return Err(Error::Precondition(format!("mixture with {k} components needs at least {} rows, got {n}", 2 * k)));
    }
    if d == 0 {
        return Err(Error::Dimension("mixture needs at least one column".into()));
    }
    let mut rng = seed::rng(seed_value);
    let means = kmeans_plus_plus(data, k, &mut rng);
    let global_mean = data.mean_axis(Axis(0)).expect("non-empty");
    let ones = Array1::from_elem(n, S::one());
    let global_cov = covariance(data, ones.view(), global_mean.view(), S::from_usize_lossy(n));
    let mut model = GmmModel {
        weights: vec![S::one() / S::from_usize_lossy(k); k],
        means,
        covariances: vec![global_cov.clone(); k],
        log_likelihood: S::neg_infinity(),
        bic: S::infinity(),
        log_likelihood_history: Vec::new(),
        n_train: n,
    };

    let mut prev = S::neg_infinity();
    for _ in 0..MAX_ITER {
        // E step
        let f = model.factor()?;
        let mut w = model.weighted_log_densities(&f, data);
        let mut ll = S::zero();
        for mut row in w.rows_mut() {
            let lse = log_sum_exp(&row.to_vec());
            ll += lse;
            row.mapv_inplace(|v| (v - lse).exp());
        }
        model.log_likelihood_history.push(ll);
        if prev.is_finite() && ((ll - prev).abs() <= S::lit(REL_TOL) * ll.abs().max(S::one())) {
            model.log_likelihood = ll;
            break;
        }
        prev = ll;
        model.log_likelihood = ll;

        // M step
        let nk = w.sum_axis(Axis(0));
        for c in 0..k {
            if nk[c].as_f64() < 1e-10 * n as f64 {
                // Collapsed component: restart it from the data's global spread.
                model.weights[c] = S::lit(1e-10);
                model.covariances[c] = global_cov.clone();
                continue;
            }
            model.weights[c] = nk[c] / S::from_usize_lossy(n);
            let mean = data.t().dot(&w.column(c)) / nk[c];
            model.covariances[c] = covariance(data, w.column(c), mean.view(), nk[c]);
            model.means.row_mut(c).assign(&mean);
        }
        let total: S = model.weights.iter().copied().sum();
        model.weights.iter_mut().for_each(|v| *v /= total);
    }
    // Likelihood of the returned parameters.
    let final_ll = model.log_density(data)?.sum();
    if final_ll.is_finite() && final_ll != model.log_likelihood {
        model.log_likelihood_history.push(final_ll);
        model.log_likelihood = final_ll;
    }
    let params = S::from_usize_lossy(GmmModel::<S>::parameter_count(k, d));
    model.bic = S::lit(-2.0) * model.log_likelihood + params * S::from_usize_lossy(n).ln();
    Ok(model)
}

/// Fits K = 1..=k_max and keeps the lowest BIC.
pub fn gmm_fit_bic<S: Scalar>(data: &ArrayView2<S>, k_max: usize, seed_value: u64) -> Result<GmmModel<S>> {
    if k_max == 0 || data.nrows() < 2 * k_max {
        return Err(Error::Precondition(format!(
            "BIC search up to {k_max} components needs at least {} rows, got {}",
            2 * k_max,
            data.nrows()
        )));
    }
    let mut best: Option<GmmModel<S>> = None;
    for k in 1..=k_max {
        let m = gmm_fit(data, k, seed::derive(seed_value, &[k as u64]))?;
        if best.as_ref().is_none_or(|b| m.bic < b.bic) {
            best = Some(m);
        }
    }
    Ok(best.expect("k_max >= 1"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::standard_normal;

    fn mixture(n: usize, sep: f64, seed_value: u64) -> Matrix<f64> {
        let mut rng = seed::rng(seed_value);
        let mut x = standard_normal::<f64>(n, 2, &mut rng);
        for i in 0..n / 2 {
            x[[i, 0]] += sep;
        }
        x
    }

    #[test]
    fn bic_picks_one_component_for_gaussian() {
        let mut rng = seed::rng(1);
        let x = standard_normal::<f64>(600, 2, &mut rng);
        assert_eq!(gmm_fit_bic(&x.view(), 4, 3).unwrap().components(), 1);
    }

    #[test]
    fn bic_picks_two_components_for_separated_pair() {
        let x = mixture(600, 12.0, 2);
        assert_eq!(gmm_fit_bic(&x.view(), 4, 3).unwrap().components(), 2);
    }

    #[test]
    fn em_log_likelihood_is_monotone() {
        for s in 0..5 {
            let x = mixture(400, 3.0, 10 + s);
            let m = gmm_fit(&x.view(), 3, s).unwrap();
            for w in m.log_likelihood_history.windows(2) {
                assert!(w[1] >= w[0] - 1e-9, "{:?}", m.log_likelihood_history);
            }
        }
    }

    #[test]
    fn weights_sum_to_one_and_parameter_count() {
        let x = mixture(300, 5.0, 4);
        let m = gmm_fit(&x.view(), 2, 0).unwrap();
        let s: f64 = m.weights.iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
        assert_eq!(GmmModel::<f64>::parameter_count(2, 2), 2 * (2 + 3) + 1);
        assert_eq!(GmmModel::<f64>::parameter_count(1, 1), 2);
    }

    #[test]
    fn single_gaussian_density_matches_closed_form() {
        let mut rng = seed::rng(5);
        let x = standard_normal::<f64>(5000, 1, &mut rng);
        let m = gmm_fit(&x.view(), 1, 0).unwrap();
        let mu = x.mean().unwrap();
        let var = x.mapv(|v| (v - mu) * (v - mu)).mean().unwrap() + RIDGE;
        let ld = m.log_density(&ndarray::array![[0.3]].view()).unwrap()[0];
        let expect = -0.5 * (2.0 * std::f64::consts::PI * var).ln() - 0.5 * (0.3 - mu).powi(2) / var;
        assert!((ld - expect).abs() < 1e-9);
    }

    #[test]
    fn too_few_rows_is_precondition_error() {
        let x = ndarray::array![[0.0], [1.0], [2.0]];
        assert!(matches!(gmm_fit_bic(&x.view(), 2, 0), Err(Error::Precondition(_))));
    }

    #[test]
    fn samples_have_fitted_moments() {
        let x = mixture(2000, 6.0, 6);
        let m = gmm_fit(&x.view(), 2, 1).unwrap();
        let s = m.sample(20_000, 9).unwrap();
        let mean = s.mean_axis(Axis(0)).unwrap();
        assert!((mean[0] - 3.0).abs() < 0.15 && mean[1].abs() < 0.1);
    }
}
