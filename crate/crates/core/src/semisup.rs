//! Cluster-gated self-training. Labeled and generated rows are clustered
//! together; every cluster that holds both kinds passes labels to its
//! generated rows, either directly (single class), through a small heuristic
//! or through a forest fitted on that cluster alone.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use ndarray::{concatenate, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, ScalingParams, UNLABELED};
use crate::error::{Error, Result};
use crate::linalg::{select_rows, Matrix};
use crate::ml::silhouette::{silhouette, DEFAULT_SUBSAMPLE};
use crate::ml::{forest_fit, isolation_forest_filter, kmeans_fit, ForestConfig, ForestModel};
use crate::scalar::{median, Scalar};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClusterMode {
    /// κ = ⌊N / α⌋.
    Formula,
    /// κ ∈ 2..=5 with the best silhouette.
    Silhouette,
}

impl FromStr for ClusterMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "formula" => Ok(ClusterMode::Formula),
            "silhouette" => Ok(ClusterMode::Silhouette),
            other => Err(Error::Config(format!("unknown cluster mode `{other}` (expected formula or silhouette)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SemiSupConfig {
    pub alpha: f64,
    pub cluster_mode: ClusterMode,
    pub min_cluster_points_for_model: usize,
    /// Isolation-forest passes over the generated rows; 0 disables scrubbing.
    pub scrub_passes: usize,
    pub forest: ForestConfig,
    pub seed: u64,
}

impl Default for SemiSupConfig {
    fn default() -> Self {
        Self {
            alpha: 100.0,
            cluster_mode: ClusterMode::Formula,
            min_cluster_points_for_model: 50,
            scrub_passes: 3,
            forest: ForestConfig::default(),
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Original,
    Generated,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Original => "original",
            Provenance::Generated => "generated",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterRule {
    Homogeneous,
    PerClusterModel,
    Heuristic,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterLog {
    pub cluster: usize,
    pub n_labeled: usize,
    pub n_unlabeled: usize,
    pub rule: ClusterRule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct LabeledAugmentation<S: Scalar> {
    /// Rows in the input units, originals first.
    pub features: Matrix<S>,
    /// `-1` marks generated rows that no rule reached.
    pub labels: Vec<i32>,
    pub provenance: Vec<Provenance>,
    pub per_cluster_log: Vec<ClusterLog>,
    pub cluster_count: usize,
    /// Generated rows removed by each scrub pass.
    pub scrubbed_per_pass: Vec<usize>,
}

impl<S: Scalar> LabeledAugmentation<S> {
    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    fn generated(&self) -> impl Iterator<Item = (usize, i32)> + '_ {
        self.provenance
            .iter()
            .zip(&self.labels)
            .enumerate()
            .filter(|(_, (p, _))| **p == Provenance::Generated)
            .map(|(i, (_, &l))| (i, l))
    }

    pub fn assigned_count(&self) -> usize {
        self.generated().filter(|(_, l)| *l >= 0).count()
    }

    pub fn skipped_count(&self) -> usize {
        self.generated().filter(|(_, l)| *l < 0).count()
    }

    pub fn scrubbed_count(&self) -> usize {
        self.scrubbed_per_pass.iter().sum()
    }

    /// Rows with a label, which is what the final classifier is trained on.
    pub fn training_rows(&self) -> Vec<usize> {
        (0..self.n_rows()).filter(|&i| self.labels[i] >= 0).collect()
    }

    /// Labeled rows as a dataset with the given column names.
    pub fn to_dataset(&self, column_names: Vec<String>) -> Result<Dataset<S>> {
        let rows = self.training_rows();
        let x = select_rows(&self.features.view(), &rows);
        Dataset::new(x, rows.iter().map(|&i| self.labels[i]).collect(), column_names)
    }

    fn keep(&mut self, rows: &[usize]) {
        self.features = select_rows(&self.features.view(), rows);
        self.labels = rows.iter().map(|&i| self.labels[i]).collect();
        self.provenance = rows.iter().map(|&i| self.provenance[i]).collect();
    }
}

/// Final classifier: min-max scaling fitted on the merged rows, then a forest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SemiSupModel<S: Scalar> {
    pub scaling: ScalingParams<S>,
    pub forest: ForestModel<S>,
}

impl<S: Scalar> SemiSupModel<S> {
    pub fn predict(&self, x: &ArrayView2<S>) -> Result<Vec<i32>> {
        let z = self.scaling.apply(x)?;
        Ok(self.forest.predict(&z.view()).into_iter().map(|c| c as i32).collect())
    }

    /// Probability of class 1.
    pub fn predict_proba(&self, x: &ArrayView2<S>) -> Result<Vec<f64>> {
        let z = self.scaling.apply(x)?;
        let p = self.forest.predict_proba(&z.view());
        Ok(if p.ncols() > 1 { p.column(1).to_vec() } else { vec![0.0; p.nrows()] })
    }
}

pub fn cluster_count(n: usize, alpha: f64) -> Result<usize> {
    if !(alpha.is_finite() && alpha >= 1.0) {
        return Err(Error::Config(format!("alpha must be a finite value >= 1, got {alpha}")));
    }
    let k = ((n as f64 / alpha).floor() as usize).clamp(1, n.max(1));
    if n == 0 {
        return Err(Error::Config("no rows to cluster".into()));
    }
    Ok(k)
}

fn choose_clusters<S: Scalar>(x: &ArrayView2<S>, cfg: &SemiSupConfig) -> Result<Vec<usize>> {
    let n = x.nrows();
    let k_seed = seed::derive_named(cfg.seed, "semisup_kmeans");
    match cfg.cluster_mode {
        ClusterMode::Formula => Ok(kmeans_fit(x, cluster_count(n, cfg.alpha)?, k_seed)?.assignments),
        ClusterMode::Silhouette => {
            let mut best: Option<(f64, Vec<usize>)> = None;
            for k in 2..=5.min(n) {
                let model = kmeans_fit(x, k, k_seed)?;
                let score = match silhouette(x, &model.assignments, DEFAULT_SUBSAMPLE, seed::derive_named(cfg.seed, "semisup_silhouette")) {
                    Ok(s) => s,
                    Err(_) => continue,
                };
                if best.as_ref().is_none_or(|(b, _)| score > *b) {
                    best = Some((score, model.assignments));
                }
            }
            match best {
                Some((_, a)) => Ok(a),
                None => Ok(vec![0; n]),
            }
        }
    }
}

fn majority(labels: impl Iterator<Item = i32>, fallback: i32) -> i32 {
    let mut counts: BTreeMap<i32, usize> = BTreeMap::new();
    for l in labels {
        *counts.entry(l).or_default() += 1;
    }
    let top = counts.values().copied().max().unwrap_or(0);
    let winners: Vec<i32> = counts.iter().filter(|(_, &c)| c == top).map(|(&l, _)| l).collect();
    match winners.as_slice() {
        [] => fallback,
        [only] => *only,
        many if many.contains(&fallback) => fallback,
        many => many[0],
    }
}

/// Median split (1-D) or quadrant split (2-D) of a small subset. Every
/// region takes the majority label of its labeled rows; regions without
/// labeled rows take the subset-wide majority. Labeled rows keep their labels
/// and a subset without labeled rows is returned unchanged.
pub fn heuristic_label_small<S: Scalar>(x: &ArrayView2<S>, labels: &[i32]) -> Result<Vec<i32>> {
    let d = x.ncols();
    if !(1..=2).contains(&d) {
        return Err(Error::Precondition(format!("heuristic labelling needs 1 or 2 columns, got {d}")));
    }
    if x.nrows() != labels.len() {
        return Err(Error::Dimension(format!("{} rows vs {} labels", x.nrows(), labels.len())));
    }
    let labeled: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] >= 0).collect();
    if labeled.is_empty() {
        return Ok(labels.to_vec());
    }
    let medians: Vec<S> = (0..d)
        .map(|j| median(&labeled.iter().map(|&i| x[[i, j]]).collect::<Vec<_>>()).expect("non-empty"))
        .collect();
    let region = |i: usize| (0..d).fold(0usize, |acc, j| acc * 2 + usize::from(x[[i, j]] > medians[j]));
    let global = majority(labeled.iter().map(|&i| labels[i]), 0);
    let region_label: Vec<i32> = (0..1 << d)
        .map(|r| majority(labeled.iter().filter(|&&i| region(i) == r).map(|&i| labels[i]), global))
        .collect();
    Ok((0..labels.len())
        .map(|i| if labels[i] >= 0 { labels[i] } else { region_label[region(i)] })
        .collect())
}

/// Repeated isolation-forest passes over the generated rows; flagged rows
/// are dropped. Stops after `passes` rounds or once a pass flags nothing.
/// Original rows are never touched.
pub fn outlier_scrub<S: Scalar>(mut aug: LabeledAugmentation<S>, passes: usize, seed_value: u64) -> LabeledAugmentation<S> {
    for pass in 0..passes {
        let generated: Vec<usize> = aug.generated().map(|(i, _)| i).collect();
        let x = select_rows(&aug.features.view(), &generated);
        let flagged = match isolation_forest_filter(&x.view(), seed::derive(seed_value, &[pass as u64])) {
            Ok((_, flagged)) => flagged,
            Err(e) => {
                log::debug!("scrub pass {pass} stopped: {e}");
                break;
            }
        };
        if flagged.is_empty() {
            break;
        }
        let mut drop = vec![false; aug.n_rows()];
        for &f in &flagged {
            drop[generated[f]] = true;
        }
        let keep: Vec<usize> = (0..aug.n_rows()).filter(|&i| !drop[i]).collect();
        aug.keep(&keep);
        aug.scrubbed_per_pass.push(flagged.len());
    }
    aug
}

fn to_class(labels: &[i32]) -> Vec<usize> {
    labels.iter().map(|&l| l as usize).collect()
}

pub fn self_train<S: Scalar>(labeled: &Dataset<S>, generated: &Dataset<S>, cfg: &SemiSupConfig) -> Result<(SemiSupModel<S>, LabeledAugmentation<S>)> {
    if labeled.n_labeled() != labeled.n_rows() {
        return Err(Error::Precondition("every row of the labeled set needs a label".into()));
    }
    let counts = labeled.class_counts();
    if counts.len() < 2 || counts.keys().any(|&c| c != 0 && c != 1) {
        return Err(Error::Precondition(format!("labeled set must hold both classes 0 and 1, found {counts:?}")));
    }
    if generated.n_labeled() > 0 {
        return Err(Error::Precondition("generated rows must be unlabeled".into()));
    }
    if generated.n_rows() > 0 && generated.n_cols() != labeled.n_cols() {
        return Err(Error::Dimension(format!("{} labeled columns vs {} generated", labeled.n_cols(), generated.n_cols())));
    }
    let n_l = labeled.n_rows();
    let features = if generated.n_rows() == 0 {
        labeled.features().to_owned()
    } else {
        concatenate(Axis(0), &[labeled.features(), generated.features()]).map_err(|e| Error::Dimension(e.to_string()))?
    };
    let n = features.nrows();
    let mut labels: Vec<i32> = labeled.labels().to_vec();
    labels.resize(n, UNLABELED);
    let provenance: Vec<Provenance> = (0..n).map(|i| if i < n_l { Provenance::Original } else { Provenance::Generated }).collect();

    let scaling = ScalingParams::fit(&features.view());
    let scaled = scaling.apply(&features.view())?;
    let assignments = choose_clusters(&scaled.view(), cfg)?;
    let k = assignments.iter().max().map_or(0, |m| m + 1);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &a) in assignments.iter().enumerate() {
        members[a].push(i);
    }

    let mut log = Vec::with_capacity(k);
    for (cluster, rows) in members.iter().enumerate() {
        let (lk, uk): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| labels[i] >= 0);
        let mut entry = ClusterLog {
            cluster,
            n_labeled: lk.len(),
            n_unlabeled: uk.len(),
            rule: ClusterRule::Skipped,
        };
        if !lk.is_empty() && !uk.is_empty() {
            let yk: Vec<i32> = lk.iter().map(|&i| labels[i]).collect();
            if yk.iter().all(|&l| l == yk[0]) {
                for &i in &uk {
                    labels[i] = yk[0];
                }
                entry.rule = ClusterRule::Homogeneous;
            } else if rows.len() < cfg.min_cluster_points_for_model && scaled.ncols() <= 2 {
                let sub = select_rows(&scaled.view(), rows);
                let sub_labels: Vec<i32> = rows.iter().map(|&i| labels[i]).collect();
                let out = heuristic_label_small(&sub.view(), &sub_labels)?;
                for (&i, l) in rows.iter().zip(out) {
                    labels[i] = l;
                }
                entry.rule = ClusterRule::Heuristic;
            } else {
                let xk = select_rows(&scaled.view(), &lk);
                let model = forest_fit(&xk.view(), &to_class(&yk), 2, &cfg.forest, seed::derive(cfg.seed, &[cluster as u64]))?;
                let xu = select_rows(&scaled.view(), &uk);
                for (&i, c) in uk.iter().zip(model.predict(&xu.view())) {
                    labels[i] = c as i32;
                }
                entry.rule = ClusterRule::PerClusterModel;
            }
        }
        log.push(entry);
    }

    let aug = LabeledAugmentation {
        features,
        labels,
        provenance,
        per_cluster_log: log,
        cluster_count: k,
        scrubbed_per_pass: Vec::new(),
    };
    let aug = outlier_scrub(aug, cfg.scrub_passes, seed::derive_named(cfg.seed, "semisup_scrub"));
    let rows = aug.training_rows();
    let x_final = scaling.apply(&select_rows(&aug.features.view(), &rows).view())?;
    let y_final: Vec<i32> = rows.iter().map(|&i| aug.labels[i]).collect();
    let forest = forest_fit(&x_final.view(), &to_class(&y_final), 2, &cfg.forest, cfg.seed)?;
    Ok((SemiSupModel { scaling, forest }, aug))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::standard_normal;
    use ndarray::{array, Array2};
    use proptest::prelude::*;

    fn planted(n_per_class: usize, noise: f64, rng: &mut seed::Rng) -> (Matrix<f64>, Vec<i32>) {
        let e = standard_normal::<f64>(2 * n_per_class, 1, rng) * noise;
        let x = Array2::from_shape_fn((2 * n_per_class, 1), |(i, _)| if i < n_per_class { 0.0 } else { 10.0 } + e[[i, 0]]);
        let y = (0..2 * n_per_class).map(|i| i32::from(i >= n_per_class)).collect();
        (x, y)
    }

    fn small_cfg() -> SemiSupConfig {
        SemiSupConfig {
            alpha: 20.0,
            forest: ForestConfig {
                tree_count: 15,
                ..ForestConfig::default()
            },
            ..SemiSupConfig::default()
        }
    }

    #[test]
    fn cluster_count_formula() {
        assert_eq!(cluster_count(250, 100.0).unwrap(), 2);
        assert_eq!(cluster_count(50, 100.0).unwrap(), 1);
        assert_eq!(cluster_count(5, 1.0).unwrap(), 5);
        assert!(matches!(cluster_count(10, 0.5), Err(Error::Config(_))));
        assert!(matches!(cluster_count(0, 10.0), Err(Error::Config(_))));
    }

    #[test]
    fn heuristic_median_split() {
        let x = array![[0.0], [10.0], [1.0], [9.0]];
        assert_eq!(heuristic_label_small(&x.view(), &[0, 1, -1, -1]).unwrap(), vec![0, 1, 0, 1]);
        assert_eq!(heuristic_label_small(&x.view(), &[1, 1, -1, -1]).unwrap(), vec![1, 1, 1, 1]);
        assert_eq!(heuristic_label_small(&x.view(), &[-1; 4]).unwrap(), vec![-1; 4]);
    }

    #[test]
    fn heuristic_quadrants_fall_back_to_global_majority() {
        let x = array![[0.0, 0.0], [0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]];
        // medians (0, 0): labeled rows sit in quadrants 0 (class 1, twice) and 3 (class 0)
        let out = heuristic_label_small(&x.view(), &[1, 1, 0, -1, -1]).unwrap();
        assert_eq!(out, vec![1, 1, 0, 1, 1]);
        assert!(heuristic_label_small(&array![[0.0, 0.0, 0.0]].view(), &[0]).is_err());
    }

    #[test]
    fn homogeneous_cluster_propagates() {
        let mut rng = seed::rng(1);
        let lx = standard_normal::<f64>(20, 2, &mut rng);
        let mut ly = vec![1; 20];
        ly[0] = 0;
        let labeled = Dataset::with_default_names(lx, ly).unwrap();
        let ux = standard_normal::<f64>(10, 2, &mut rng);
        let generated = Dataset::unlabeled(ux);
        // one cluster holding both classes and 30 < 50 rows, 2-D: heuristic route
        let cfg = SemiSupConfig {
            alpha: 1000.0,
            scrub_passes: 0,
            ..small_cfg()
        };
        let (_, aug) = self_train(&labeled, &generated, &cfg).unwrap();
        assert_eq!(aug.per_cluster_log[0].rule, ClusterRule::Heuristic);
        assert_eq!(aug.skipped_count(), 0);

        let labeled = Dataset::with_default_names(standard_normal::<f64>(20, 2, &mut rng), vec![1; 20]).unwrap();
        let both = labeled.concat(&Dataset::with_default_names(array![[50.0, 50.0]], vec![0]).unwrap()).unwrap();
        let generated = Dataset::unlabeled(standard_normal::<f64>(10, 2, &mut rng));
        let cfg = SemiSupConfig {
            alpha: 15.0,
            scrub_passes: 0,
            ..small_cfg()
        };
        let (_, aug) = self_train(&both, &generated, &cfg).unwrap();
        assert_eq!(aug.cluster_count, 2);
        assert!(aug.per_cluster_log.iter().any(|c| c.rule == ClusterRule::Homogeneous && c.n_unlabeled == 10));
        assert!(aug.labels[21..].iter().all(|&l| l == 1));
    }

    #[test]
    fn planted_clusters_are_labeled_by_position() {
        let mut rng = seed::rng(2);
        let (lx, ly) = planted(100, 0.5, &mut rng);
        let labeled = Dataset::with_default_names(lx, ly).unwrap();
        let (ux, uy) = planted(100, 0.5, &mut rng);
        let generated = Dataset::unlabeled(ux);
        let cfg = SemiSupConfig {
            scrub_passes: 0,
            ..small_cfg()
        };
        let (model, aug) = self_train(&labeled, &generated, &cfg).unwrap();
        assert_eq!(&aug.labels[200..], uy.as_slice());
        let (px, py) = planted(50, 0.5, &mut rng);
        assert_eq!(model.predict(&px.view()).unwrap(), py);
    }

    #[test]
    fn empty_generated_set_matches_plain_forest() {
        let mut rng = seed::rng(3);
        let (lx, ly) = planted(40, 3.0, &mut rng);
        let labeled = Dataset::with_default_names(lx.clone(), ly.clone()).unwrap();
        let generated = Dataset::unlabeled(Matrix::<f64>::zeros((0, 1)));
        let cfg = small_cfg();
        let (model, aug) = self_train(&labeled, &generated, &cfg).unwrap();
        assert_eq!(aug.labels, ly);
        let scaling = ScalingParams::fit(&lx.view());
        let scaled = scaling.apply(&lx.view()).unwrap();
        let plain = forest_fit(&scaled.view(), &to_class(&ly), 2, &cfg.forest, cfg.seed).unwrap();
        let probe = standard_normal::<f64>(100, 1, &mut rng) * 6.0 + 5.0;
        let expected: Vec<i32> = plain.predict(&scaling.apply(&probe.view()).unwrap().view()).into_iter().map(|c| c as i32).collect();
        assert_eq!(model.predict(&probe.view()).unwrap(), expected);
    }

    #[test]
    fn preconditions() {
        let one_class = Dataset::with_default_names(array![[0.0], [1.0]], vec![1, 1]).unwrap();
        let generated = Dataset::unlabeled(array![[0.5]]);
        assert!(matches!(self_train(&one_class, &generated, &small_cfg()), Err(Error::Precondition(_))));
        let ok = Dataset::with_default_names(array![[0.0], [1.0]], vec![0, 1]).unwrap();
        let cfg = SemiSupConfig {
            alpha: 0.0,
            ..small_cfg()
        };
        assert!(matches!(self_train(&ok, &generated, &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn scrub_drops_planted_generated_outliers_only() {
        let mut rng = seed::rng(4);
        let mut gx = standard_normal::<f64>(100, 2, &mut rng);
        for i in 0..5 {
            gx[[i, 0]] = 100.0 * (i as f64).cos();
            gx[[i, 1]] = 100.0 * (i as f64).sin();
        }
        let ox = standard_normal::<f64>(30, 2, &mut rng) * 100.0;
        let features = concatenate![Axis(0), ox, gx];
        let mut provenance = vec![Provenance::Original; 30];
        provenance.extend(vec![Provenance::Generated; 100]);
        let aug = LabeledAugmentation {
            features,
            labels: (0..130).map(|i| (i % 2) as i32).collect(),
            provenance,
            per_cluster_log: Vec::new(),
            cluster_count: 1,
            scrubbed_per_pass: Vec::new(),
        };
        let out = outlier_scrub(aug.clone(), 1, 9);
        assert_eq!(out.scrubbed_per_pass, vec![5]);
        assert_eq!(out.features.slice(ndarray::s![..30, ..]), aug.features.slice(ndarray::s![..30, ..]));
        assert!(out.features.slice(ndarray::s![30.., ..]).iter().all(|v| v.abs() < 10.0));
        let out = outlier_scrub(aug, 3, 9);
        assert!(out.scrubbed_per_pass.len() <= 3);
        assert!(out.scrubbed_per_pass.iter().all(|&c| c <= 5));
        assert_eq!(out.provenance.iter().filter(|p| **p == Provenance::Original).count(), 30);
    }

    #[test]
    fn silhouette_mode_finds_two_blobs() {
        let mut rng = seed::rng(5);
        let (lx, ly) = planted(60, 0.3, &mut rng);
        let labeled = Dataset::with_default_names(lx, ly).unwrap();
        let (ux, uy) = planted(30, 0.3, &mut rng);
        let cfg = SemiSupConfig {
            cluster_mode: ClusterMode::Silhouette,
            scrub_passes: 0,
            ..small_cfg()
        };
        let (_, aug) = self_train(&labeled, &Dataset::unlabeled(ux), &cfg).unwrap();
        assert_eq!(aug.cluster_count, 2);
        assert_eq!(&aug.labels[120..], uy.as_slice());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn labels_conserved_counts_reconcile_and_deterministic(seed_value in 0u64..1000, n_u in 0usize..80, alpha in 2.0f64..40.0) {
            let mut rng = seed::rng(seed_value);
            let lx = standard_normal::<f64>(60, 2, &mut rng);
            let ly: Vec<i32> = (0..60).map(|i| i32::from(lx[[i, 0]] + 0.3 * lx[[i, 1]] > 0.0) ).collect();
            prop_assume!(ly.contains(&0) && ly.contains(&1));
            let labeled = Dataset::with_default_names(lx.clone(), ly.clone()).unwrap();
            let generated = Dataset::unlabeled(standard_normal::<f64>(n_u, 2, &mut rng) * 1.5);
            let cfg = SemiSupConfig { alpha, seed: seed_value, ..small_cfg() };
            let (_, aug) = self_train(&labeled, &generated, &cfg).unwrap();
            let originals: Vec<usize> = (0..aug.n_rows()).filter(|&i| aug.provenance[i] == Provenance::Original).collect();
            prop_assert_eq!(originals.len(), 60);
            for (j, &i) in originals.iter().enumerate() {
                prop_assert_eq!(aug.labels[i], ly[j]);
                prop_assert_eq!(aug.features.row(i), lx.row(j));
            }
            prop_assert_eq!(n_u, aug.assigned_count() + aug.skipped_count() + aug.scrubbed_count());
            prop_assert!(aug.training_rows().iter().all(|&i| aug.labels[i] == 0 || aug.labels[i] == 1));
            let (_, again) = self_train(&labeled, &generated, &cfg).unwrap();
            prop_assert_eq!(aug, again);
        }
    }
}
