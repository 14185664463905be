//! Distribution-comparison statistics between real and generated samples.

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ml::gmm::gmm_fit_bic;
use crate::scalar::{total_cmp, Scalar};

pub const KS_ALPHA: f64 = 0.05;
const SERIES_TOL: f64 = 1e-12;
const SERIES_MAX_TERMS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    #[serde(rename = "D")]
    pub d: f64,
    pub p_value: f64,
    pub critical_d: f64,
    pub reject_at_005: bool,
}

fn sorted_f64<S: Scalar>(v: &[S]) -> Vec<f64> {
    let mut out: Vec<f64> = v.iter().map(|x| x.as_f64()).collect();
    out.sort_by(total_cmp);
    out
}

/// c(α) = √(−ln(α/2)/2).
pub fn ks_c_alpha(alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt()
}

/// Survival function of the Kolmogorov distribution, P(K > z).
pub fn kolmogorov_survival(z: f64) -> f64 {
    if z <= 0.0 {
        return 1.0;
    }
    if z < 1.18 {
        // Small-z form converges quickly where the alternating series does not.
        let pi2 = std::f64::consts::PI * std::f64::consts::PI;
        let mut cdf = 0.0;
        for i in 1..=SERIES_MAX_TERMS {
            let k = (2 * i - 1) as f64;
            let term = (-(k * k) * pi2 / (8.0 * z * z)).exp();
            cdf += term;
            if term < SERIES_TOL {
                break;
            }
        }
        cdf *= (2.0 * std::f64::consts::PI).sqrt() / z;
        return (1.0 - cdf).clamp(0.0, 1.0);
    }
    let mut sum = 0.0;
    for i in 1..=SERIES_MAX_TERMS {
        let fi = i as f64;
        let term = (-2.0 * fi * fi * z * z).exp();
        sum += if i % 2 == 1 { term } else { -term };
        if term < SERIES_TOL {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sample Kolmogorov–Smirnov test.
pub fn ks_two_sample<S: Scalar>(a: &[S], b: &[S]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Precondition("KS test needs two non-empty samples".into()));
    }
    let (sa, sb) = (sorted_f64(a), sorted_f64(b));
    let (na, nb) = (sa.len() as f64, sb.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < sa.len() && j < sb.len() {
        let x = sa[i].min(sb[j]);
        while i < sa.len() && sa[i] <= x {
            i += 1;
        }
        while j < sb.len() && sb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let en = na * nb / (na + nb);
    let z = d * en.sqrt();
    let critical_d = ks_c_alpha(KS_ALPHA) / en.sqrt();
    Ok(KsResult {
        d,
        p_value: kolmogorov_survival(z),
        critical_d,
        reject_at_005: d > critical_d,
    })
}

/// First Wasserstein distance between two empirical distributions on the line,
/// ∫ |F_a(x) − F_b(x)| dx.
pub fn wasserstein_1d<S: Scalar>(a: &[S], b: &[S]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Precondition("Wasserstein distance needs two non-empty samples".into()));
    }
    let (sa, sb) = (sorted_f64(a), sorted_f64(b));
    let mut all: Vec<f64> = sa.iter().chain(&sb).copied().collect();
    all.sort_by(total_cmp);
    let (na, nb) = (sa.len() as f64, sb.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut total = 0.0;
    for w in all.windows(2) {
        while i < sa.len() && sa[i] <= w[0] {
            i += 1;
        }
        while j < sb.len() && sb[j] <= w[0] {
            j += 1;
        }
        total += (i as f64 / na - j as f64 / nb).abs() * (w[1] - w[0]);
    }
    Ok(total)
}

pub fn pearson<S: Scalar>(x: &[S], y: &[S]) -> Result<f64> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return Err(Error::Precondition("Pearson correlation needs two equal-length samples of size >= 2".into()));
    }
    let mx = x.iter().map(|v| v.as_f64()).sum::<f64>() / n as f64;
    let my = y.iter().map(|v| v.as_f64()).sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a.as_f64() - mx, b.as_f64() - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Undefined("correlation of a zero-variance column".into()));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// |r_U(0,1) − r_L(0,1)| / 2 over the first two columns; 0 for single-column data.
pub fn pearson_similarity<S: Scalar>(real: &ArrayView2<S>, synth: &ArrayView2<S>) -> Result<f64> {
    if real.ncols() != synth.ncols() {
        return Err(Error::Dimension(format!("{} real vs {} synthetic columns", real.ncols(), synth.ncols())));
    }
    if real.ncols() < 2 {
        return Ok(0.0);
    }
    let r = |m: &ArrayView2<S>| pearson(&m.column(0).to_vec(), &m.column(1).to_vec());
    Ok((r(synth)? - r(real)?).abs() / 2.0)
}

/// Per-column range coverage of the real data by the synthetic data.
/// Constant real columns are skipped (None).
pub fn range_coverage_columns<S: Scalar>(real: &ArrayView2<S>, synth: &ArrayView2<S>) -> Result<Vec<Option<f64>>> {
    if real.ncols() != synth.ncols() {
        return Err(Error::Dimension(format!("{} real vs {} synthetic columns", real.ncols(), synth.ncols())));
    }
    if real.nrows() == 0 || synth.nrows() == 0 {
        return Err(Error::Precondition("range coverage needs non-empty samples".into()));
    }
    let bounds = |c: ndarray::ArrayView1<S>| {
        c.iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v.as_f64()), hi.max(v.as_f64())))
    };
    Ok((0..real.ncols())
        .map(|j| {
            let (min_l, max_l) = bounds(real.column(j));
            let (min_u, max_u) = bounds(synth.column(j));
            let span = max_l - min_l;
            if span <= 0.0 {
                log::warn!("range coverage: real column {j} is constant, skipped");
                return None;
            }
            Some(1.0 - (((min_u - min_l) / span).max(0.0) + ((max_l - max_u) / span).max(0.0)))
        })
        .collect())
}

pub fn range_coverage<S: Scalar>(real: &ArrayView2<S>, synth: &ArrayView2<S>) -> Result<f64> {
    let cols: Vec<f64> = range_coverage_columns(real, synth)?.into_iter().flatten().collect();
    if cols.is_empty() {
        return Err(Error::Undefined("range coverage: every real column is constant".into()));
    }
    Ok(cols.iter().sum::<f64>() / cols.len() as f64)
}

/// Mean log-density of `synth` under a BIC-selected mixture fitted on `real`.
pub fn gmm_loglik<S: Scalar>(real: &ArrayView2<S>, synth: &ArrayView2<S>, max_components: usize, seed_value: u64) -> Result<f64> {
    let k = max_components.min(real.nrows() / 2).max(1);
    let model = gmm_fit_bic(real, k, seed_value)?;
    Ok(model.mean_log_density(synth)?.as_f64())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::standard_normal;
    use crate::seed;
    use ndarray::array;
    use proptest::prelude::*;

    #[test]
    fn ks_examples() {
        assert_eq!(ks_two_sample(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap().d, 0.0);
        assert_eq!(ks_two_sample(&[0.0, 0.0], &[1.0, 1.0]).unwrap().d, 1.0);
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[1.5, 2.5]).unwrap().d, 0.5);
        assert!(ks_two_sample::<f64>(&[], &[1.0]).is_err());
    }

    #[test]
    fn ks_critical_value_and_p() {
        let r = ks_two_sample(&[0.0; 100], &[1.0; 100]).unwrap();
        assert!((r.critical_d - ks_c_alpha(0.05) * (200.0f64 / 10_000.0).sqrt()).abs() < 1e-15);
        assert!(r.reject_at_005 && r.p_value < 1e-12);
        // Standard table value: P(K > 1.358) ≈ 0.05.
        assert!((kolmogorov_survival(1.358) - 0.05).abs() < 1e-3);
        // Both branches agree at the switch point.
        let z = 1.18;
        let small = {
            let pi2 = std::f64::consts::PI.powi(2);
            let s: f64 = (1..50).map(|i| (-((2 * i - 1) as f64).powi(2) * pi2 / (8.0 * z * z)).exp()).sum();
            1.0 - s * (2.0 * std::f64::consts::PI).sqrt() / z
        };
        assert!((kolmogorov_survival(z) - small).abs() < 1e-10);
    }

    #[test]
    fn wasserstein_examples() {
        assert_eq!(wasserstein_1d(&[0.0, 1.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert!((wasserstein_1d(&[0.0, 1.0], &[0.5, 1.5]).unwrap() - 0.5).abs() < 1e-15);
        let a = [0.3, -1.0, 2.2, 5.0];
        let b: Vec<f64> = a.iter().map(|v| v + 1.25).collect();
        assert!((wasserstein_1d(&a, &b).unwrap() - 1.25).abs() < 1e-12);
        // Unequal sizes: {0} vs {0, 1} transports half the mass a distance 1.
        assert!((wasserstein_1d(&[0.0], &[0.0, 1.0]).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn pearson_similarity_examples() {
        let l = array![[1.0, 2.0], [2.0, 4.0], [3.0, 6.5]];
        assert_eq!(pearson_similarity(&l.view(), &l.view()).unwrap(), 0.0);
        let pos = array![[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]];
        let neg = array![[1.0, 3.0], [2.0, 2.0], [3.0, 1.0]];
        assert!((pearson_similarity(&pos.view(), &neg.view()).unwrap() - 1.0).abs() < 1e-12);
        let one = array![[1.0], [2.0]];
        assert_eq!(pearson_similarity(&one.view(), &one.view()).unwrap(), 0.0);
        let flat = array![[1.0, 1.0], [2.0, 1.0]];
        assert!(matches!(pearson_similarity(&flat.view(), &pos.view()), Err(Error::Dimension(_)) | Err(Error::Undefined(_))));
        assert!(matches!(pearson_similarity(&flat.view(), &flat.view()), Err(Error::Undefined(_))));
    }

    #[test]
    fn coverage_examples() {
        let l = array![[0.0], [10.0]];
        assert_eq!(range_coverage(&l.view(), &l.view()).unwrap(), 1.0);
        assert!((range_coverage(&l.view(), &array![[2.5], [10.0]].view()).unwrap() - 0.75).abs() < 1e-15);
        assert_eq!(range_coverage(&l.view(), &array![[-3.0], [12.0]].view()).unwrap(), 1.0);
        let mixed = array![[0.0, 5.0], [10.0, 5.0]];
        let cols = range_coverage_columns(&mixed.view(), &array![[2.5, 1.0], [10.0, 1.0]].view()).unwrap();
        assert_eq!(cols[1], None);
        assert!((range_coverage(&mixed.view(), &array![[2.5, 1.0], [10.0, 1.0]].view()).unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn gmm_loglik_self_consistency_and_shift() {
        let mut rng = seed::rng(3);
        let real = standard_normal::<f64>(2000, 2, &mut rng);
        let model = gmm_fit_bic(&real.view(), 5, 1).unwrap();
        let own = model.mean_log_density(&real.view()).unwrap();
        let synth = model.sample(5000, 4).unwrap();
        let ll = gmm_loglik(&real.view(), &synth.view(), 5, 1).unwrap();
        assert!((ll - own).abs() < 0.2);
        let far = &synth + 100.0;
        assert!(gmm_loglik(&real.view(), &far.view(), 5, 1).unwrap() < ll - 100.0);
    }

    proptest! {
        #[test]
        fn ks_invariant_under_monotone_transform(
            a in proptest::collection::vec(-5.0f64..5.0, 1..30),
            b in proptest::collection::vec(-5.0f64..5.0, 1..30),
        ) {
            let f = |v: &f64| v.powi(3) + 2.0 * v;
            let ta: Vec<f64> = a.iter().map(f).collect();
            let tb: Vec<f64> = b.iter().map(f).collect();
            prop_assert_eq!(ks_two_sample(&a, &b).unwrap().d, ks_two_sample(&ta, &tb).unwrap().d);
        }

        #[test]
        fn wasserstein_triangle(
            a in proptest::collection::vec(-5.0f64..5.0, 1..20),
            b in proptest::collection::vec(-5.0f64..5.0, 1..20),
            c in proptest::collection::vec(-5.0f64..5.0, 1..20),
        ) {
            let ab = wasserstein_1d(&a, &b).unwrap();
            let bc = wasserstein_1d(&b, &c).unwrap();
            let ac = wasserstein_1d(&a, &c).unwrap();
            prop_assert!(ac <= ab + bc + 1e-9);
            prop_assert!((ab - wasserstein_1d(&b, &a).unwrap()).abs() < 1e-12);
        }
    }
}
