//! End-to-end runs: load, reduce, pick the latent size, train a generator on
//! the latent rows, self-train the discriminator, label the generated rows,
//! decode them and write the augmented dataset with a report and manifest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::autoencoder::{decision_matrix, sweep_with_widths, AutoencoderConfig, AutoencoderModel, SweepResult, WIDTH_CHOICES};
use crate::data::{load_csv, minmax_scale, stratified_folds, Dataset};
use crate::error::{Error, Result};
use crate::eval::{evaluate, evaluate_discriminator, vote, CrossValidatedScores, MetricDetails, MetricReport, VotePolicy, VoteTally};
use crate::generators::{train_generator, GeneratorConfig, GeneratorKind, GeneratorModel};
use crate::linalg::Matrix;
use crate::ml::train_efficiency_models;
use crate::semisup::{self_train, ClusterLog, SemiSupConfig, SemiSupModel};
use crate::seed;
use crate::topsis::{self, default_sweep_directions, equal_weights, Direction};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const DATASET_FILE: &str = "dataset.csv";
pub const REPORT_FILE: &str = "report.json";
pub const AUTOENCODER_FILE: &str = "autoencoder.json";
pub const SELECTION_FILE: &str = "selection.json";
pub const GENERATOR_FILE: &str = "generator.json";
pub const AUGMENTATION_FILE: &str = "augmentation.json";
pub const BENCHMARK_JSON: &str = "benchmark.json";
pub const BENCHMARK_TABLE: &str = "benchmark.txt";
pub const PROVENANCE_COLUMN: &str = "provenance";

const RUN_ARTIFACTS: [&str; 6] = [DATASET_FILE, REPORT_FILE, AUTOENCODER_FILE, SELECTION_FILE, GENERATOR_FILE, AUGMENTATION_FILE];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub dataset: PathBuf,
    pub label_column: String,
    pub generator: GeneratorKind,
    /// Fixed latent size; `None` picks one by TOPSIS over `m_values`.
    pub latent_dim: Option<usize>,
    /// Candidate latent sizes; empty means every size below the input width.
    pub m_values: Vec<usize>,
    pub width_choices: Vec<usize>,
    pub topsis_directions: Vec<Direction>,
    /// Equal weights when absent.
    pub topsis_weights: Option<Vec<f64>>,
    /// Number of generated rows; defaults to the labeled row count.
    pub generated_count: Option<usize>,
    pub autoencoder: AutoencoderConfig,
    pub generators: GeneratorConfig,
    /// The seed field is replaced by the `label` stage seed.
    pub semisup: SemiSupConfig,
    pub efficiency: bool,
    /// Folds for cross-validating the discriminator; 0 skips it.
    pub cv_folds: usize,
    pub seed: u64,
    /// Per-stage seed overrides; other stages hash their name with `seed`.
    pub stage_seeds: BTreeMap<String, u64>,
    pub out_dir: PathBuf,
    pub resume: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            dataset: PathBuf::new(),
            label_column: "label".into(),
            generator: GeneratorKind::Flow,
            latent_dim: None,
            m_values: Vec::new(),
            width_choices: WIDTH_CHOICES.to_vec(),
            topsis_directions: default_sweep_directions(),
            topsis_weights: None,
            generated_count: None,
            autoencoder: AutoencoderConfig::default(),
            generators: GeneratorConfig::default(),
            semisup: SemiSupConfig::default(),
            efficiency: true,
            cv_folds: 0,
            seed: 42,
            stage_seeds: BTreeMap::new(),
            out_dir: PathBuf::from("out"),
            resume: false,
        }
    }
}

impl PipelineConfig {
    pub fn stage_seed(&self, stage: &str) -> u64 {
        self.stage_seeds.get(stage).copied().unwrap_or_else(|| seed::derive_named(self.seed, stage))
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.as_ref().display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("invalid config {}: {e}", path.as_ref().display())))
    }

    pub fn validate(&self) -> Result<()> {
        if !self.dataset.is_file() {
            return Err(Error::Config(format!("dataset `{}` does not exist", self.dataset.display())));
        }
        self.validate_settings()
    }

    fn validate_settings(&self) -> Result<()> {
        if self.out_dir.as_os_str().is_empty() {
            return Err(Error::Config("output directory is empty".into()));
        }
        if self.latent_dim == Some(0) || self.m_values.contains(&0) {
            return Err(Error::Config("latent sizes must be positive".into()));
        }
        if self.width_choices.is_empty() || self.width_choices.contains(&0) {
            return Err(Error::Config("width choices must be non-empty and positive".into()));
        }
        if self.topsis_directions.len() != topsis::SWEEP_CRITERIA.len() {
            return Err(Error::Config(format!("expected {} TOPSIS directions", topsis::SWEEP_CRITERIA.len())));
        }
        if let Some(w) = &self.topsis_weights {
            if w.len() != topsis::SWEEP_CRITERIA.len() {
                return Err(Error::Config(format!("expected {} TOPSIS weights", topsis::SWEEP_CRITERIA.len())));
            }
        }
        if self.cv_folds == 1 {
            return Err(Error::Config("cross-validation needs at least 2 folds".into()));
        }
        if !(self.semisup.alpha.is_finite() && self.semisup.alpha >= 1.0) {
            return Err(Error::Config(format!("alpha must be >= 1, got {}", self.semisup.alpha)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactRecord {
    /// Relative to the output directory.
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    pub seed: u64,
    pub input_digest: Option<String>,
    pub artifacts: Vec<ArtifactRecord>,
    pub seconds: f64,
    pub resumed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: PipelineConfig,
    pub versions: BTreeMap<String, String>,
    pub stages: Vec<StageRecord>,
    pub failed_stage: Option<String>,
    pub error: Option<String>,
}

impl RunManifest {
    fn new(config: &PipelineConfig) -> Self {
        let versions = BTreeMap::from([
            ("obsolescence".to_string(), env!("CARGO_PKG_VERSION").to_string()),
            ("manifest_format".to_string(), "1".to_string()),
        ]);
        Self {
            config: config.clone(),
            versions,
            stages: Vec::new(),
            failed_stage: None,
            error: None,
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_slice(&std::fs::read(path)?)?)
    }

    pub fn stage(&self, name: &str) -> Option<&StageRecord> {
        self.stages.iter().find(|s| s.stage == name)
    }

    pub fn artifact_paths(&self) -> Vec<String> {
        self.stages.iter().flat_map(|s| s.artifacts.iter().map(|a| a.path.clone())).collect()
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn digest_of(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    hex::encode(h.finalize())
}

/// Sweep metrics and TOPSIS outcome behind an automatic latent-size choice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentSelection {
    pub input_entropy: f64,
    pub results: Vec<SweepResult>,
    pub closeness: Vec<f64>,
    pub ranking: Vec<usize>,
    pub selected_m: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentationSummary {
    pub cluster_count: usize,
    pub assigned: usize,
    pub skipped: usize,
    pub scrubbed: usize,
    pub per_cluster_log: Vec<ClusterLog>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub generator: GeneratorKind,
    pub latent_dim: usize,
    pub labeled_rows: usize,
    pub generated_rows: usize,
    /// `computed` or `skipped`.
    pub metrics_status: String,
    pub metrics: Option<MetricReport>,
    pub metric_details: Option<MetricDetails>,
    pub generated_label_counts: BTreeMap<i32, usize>,
    pub augmentation: Option<AugmentationSummary>,
    pub efficiency: Option<BTreeMap<String, f64>>,
    pub cross_validation: Option<CrossValidatedScores>,
    pub selection: Option<LatentSelection>,
    pub generator_warnings: Vec<String>,
    pub notes: Vec<String>,
}

/// Min-max scales `data`, trains the autoencoder sweep and returns the chosen
/// model (which encodes rows in original units).
pub fn reduce(data: &Dataset, cfg: &PipelineConfig, seed_value: u64) -> Result<(AutoencoderModel<f64>, Option<LatentSelection>)> {
    let n = data.n_cols();
    if n < 2 {
        return Err(Error::Config("reduction needs at least two feature columns".into()));
    }
    let m_values: Vec<usize> = match cfg.latent_dim {
        Some(m) => vec![m],
        None if cfg.m_values.is_empty() => (1..n).collect(),
        None => cfg.m_values.clone(),
    };
    if let Some(&bad) = m_values.iter().find(|&&m| m == 0 || m >= n) {
        return Err(Error::Config(format!("latent size {bad} outside 1..{n}")));
    }
    let (scaled, params) = minmax_scale(data)?;
    let out = sweep_with_widths(&scaled.features(), &m_values, &cfg.width_choices, seed_value, &cfg.autoencoder)?;
    let (chosen, selection) = if cfg.latent_dim.is_some() || m_values.len() == 1 {
        (0, None)
    } else {
        let weights = cfg.topsis_weights.clone().unwrap_or_else(|| equal_weights(topsis::SWEEP_CRITERIA.len()));
        let decision = topsis::rank(&decision_matrix(&out.results).view(), &weights, &cfg.topsis_directions)?;
        let best = decision.best();
        let selection = LatentSelection {
            input_entropy: out.input_entropy,
            results: out.results.clone(),
            closeness: decision.closeness.clone(),
            ranking: decision.ranking.clone(),
            selected_m: m_values[best],
        };
        (best, Some(selection))
    };
    let model = out.models.into_iter().nth(chosen).expect("one model per latent size");
    Ok((model.with_scaling(params)?, selection))
}

/// Labels generated latent rows: self-training on `(latent, generated)`,
/// then the final classifier predicts every generated row.
pub fn label_generated(
    latent: &Dataset,
    generated: &Matrix<f64>,
    semisup: &SemiSupConfig,
    seed_value: u64,
) -> Result<(SemiSupModel<f64>, crate::semisup::LabeledAugmentation<f64>, Vec<i32>)> {
    let cfg = SemiSupConfig {
        seed: seed_value,
        ..semisup.clone()
    };
    let unlabeled = Dataset::new(generated.clone(), vec![crate::data::UNLABELED; generated.nrows()], latent.column_names().to_vec())?;
    let (model, aug) = self_train(latent, &unlabeled, &cfg)?;
    let labels = if generated.nrows() == 0 {
        Vec::new()
    } else {
        model.predict(&generated.view())?
    };
    Ok((model, aug, labels))
}

/// Cross-validated discriminator scores. Every fold trains its own
/// generator on the training rows, so no test row reaches the generator.
pub fn cross_validate(
    latent: &Dataset,
    kind: GeneratorKind,
    generators: &GeneratorConfig,
    semisup: &SemiSupConfig,
    folds: usize,
    seed_value: u64,
) -> Result<CrossValidatedScores> {
    let assignment = stratified_folds(latent, folds, seed::derive_named(seed_value, "folds"))?;
    evaluate_discriminator(latent, &assignment, |fold, train, test| {
        let s = seed::derive(seed_value, &[fold as u64]);
        let g = train_generator(kind, &train.features(), generators, seed::derive_named(s, "generate"))?;
        let u = g.sample(train.n_rows(), seed::derive_named(s, "sample"))?;
        let (model, _, _) = label_generated(train, &u, semisup, seed::derive_named(s, "label"))?;
        model.predict_proba(&test.features())
    })
}

fn latent_dataset(model: &AutoencoderModel<f64>, data: &Dataset) -> Result<Dataset> {
    let z = model.encode(&data.features())?;
    Dataset::new(z, data.labels().to_vec(), crate::data::default_names(model.latent_dim))
}

fn load_labeled(path: &Path, label_column: &str) -> Result<Dataset> {
    let data: Dataset = load_csv(path, label_column)?;
    let n_unlabeled = data.n_unlabeled();
    if n_unlabeled > 0 {
        log::warn!("{}: ignoring {n_unlabeled} unlabeled rows", path.display());
    }
    let data = data.labeled();
    if data.class_counts().len() < 2 {
        return Err(Error::Precondition(format!("{} must contain both classes", path.display())));
    }
    Ok(data)
}

fn count_labels(labels: &[i32]) -> BTreeMap<i32, usize> {
    let mut out = BTreeMap::new();
    for &l in labels {
        *out.entry(l).or_default() += 1;
    }
    out
}

struct Runner<'a> {
    cfg: &'a PipelineConfig,
    manifest: RunManifest,
    previous: Option<RunManifest>,
}

impl Runner<'_> {
    fn path(&self, name: &str) -> PathBuf {
        self.cfg.out_dir.join(name)
    }

    fn write(&self, rec: &mut StageRecord, name: &str, bytes: &[u8]) -> Result<()> {
        std::fs::write(self.path(name), bytes)?;
        rec.artifacts.push(ArtifactRecord {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    /// The previous record of `stage` when its input digest matches and every
    /// artifact is still on disk unchanged.
    fn reusable(&self, stage: &str, digest: &str) -> Option<StageRecord> {
        if !self.cfg.resume {
            return None;
        }
        let prev = self.previous.as_ref()?.stage(stage)?;
        if prev.input_digest.as_deref() != Some(digest) {
            return None;
        }
        let intact = prev
            .artifacts
            .iter()
            .all(|a| std::fs::read(self.path(&a.path)).is_ok_and(|b| sha256_hex(&b) == a.sha256));
        intact.then(|| prev.clone())
    }

    fn stage<T>(&mut self, name: &str, digest: Option<String>, body: impl FnOnce(&Self, &mut StageRecord, Option<StageRecord>) -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let mut rec = StageRecord {
            stage: name.to_string(),
            seed: self.cfg.stage_seed(name),
            input_digest: digest.clone(),
            artifacts: Vec::new(),
            seconds: 0.0,
            resumed: false,
        };
        let previous = digest.as_deref().and_then(|d| self.reusable(name, d));
        match body(self, &mut rec, previous) {
            Ok(v) => {
                rec.seconds = start.elapsed().as_secs_f64();
                log::info!("stage {name} finished in {:.1}s{}", rec.seconds, if rec.resumed { " (resumed)" } else { "" });
                self.manifest.stages.push(rec);
                Ok(v)
            }
            Err(e) => {
                rec.seconds = start.elapsed().as_secs_f64();
                self.manifest.stages.push(rec);
                self.manifest.failed_stage = Some(name.to_string());
                self.manifest.error = Some(e.to_string());
                if let Err(w) = self.write_manifest() {
                    log::warn!("could not write partial manifest: {w}");
                }
                Err(e.in_stage(name))
            }
        }
    }

    fn write_manifest(&self) -> Result<()> {
        std::fs::write(self.path(MANIFEST_FILE), serde_json::to_vec_pretty(&self.manifest)?)?;
        Ok(())
    }
}

pub fn run_pipeline(cfg: &PipelineConfig) -> Result<RunManifest> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.out_dir)?;
    let previous = if cfg.resume { RunManifest::load(cfg.out_dir.join(MANIFEST_FILE)).ok() } else { None };
    let mut run = Runner {
        cfg,
        manifest: RunManifest::new(cfg),
        previous,
    };

    let (data, raw_digest) = run.stage("load", None, |_, _, _| {
        let raw = std::fs::read(&cfg.dataset)?;
        Ok((load_labeled(&cfg.dataset, &cfg.label_column)?, sha256_hex(&raw)))
    })?;
    let n_l = data.n_rows();
    let n_u = cfg.generated_count.unwrap_or(n_l);

    let reduce_settings = serde_json::to_vec(&(
        &cfg.label_column,
        cfg.latent_dim,
        &cfg.m_values,
        &cfg.width_choices,
        &cfg.topsis_directions,
        &cfg.topsis_weights,
        &cfg.autoencoder,
    ))?;
    let reduce_seed = cfg.stage_seed("reduce");
    let reduce_digest = digest_of(&[raw_digest.as_bytes(), &reduce_settings, &reduce_seed.to_le_bytes()]);
    let (ae, selection) = run.stage("reduce", Some(reduce_digest), |r, rec, prev| {
        if let Some(prev) = prev {
            let ae = AutoencoderModel::load(r.path(AUTOENCODER_FILE))?;
            let selection = if prev.artifacts.iter().any(|a| a.path == SELECTION_FILE) {
                Some(serde_json::from_slice(&std::fs::read(r.path(SELECTION_FILE))?)?)
            } else {
                None
            };
            *rec = StageRecord { seconds: 0.0, resumed: true, ..prev };
            return Ok((ae, selection));
        }
        let (ae, selection) = reduce(&data, cfg, reduce_seed)?;
        r.write(rec, AUTOENCODER_FILE, &serde_json::to_vec_pretty(&ae)?)?;
        if let Some(s) = &selection {
            r.write(rec, SELECTION_FILE, &serde_json::to_vec_pretty(s)?)?;
        }
        Ok((ae, selection))
    })?;

    let latent = latent_dataset(&ae, &data)?;
    let ae_digest = run.manifest.stage("reduce").and_then(|s| s.artifacts.first()).map(|a| a.sha256.clone()).unwrap_or_default();
    let gen_settings = serde_json::to_vec(&(cfg.generator, &cfg.generators))?;
    let gen_seed = cfg.stage_seed("generate");
    let gen_digest = digest_of(&[ae_digest.as_bytes(), &gen_settings, &gen_seed.to_le_bytes()]);
    let generator: Option<GeneratorModel<f64>> = run.stage("generate", Some(gen_digest), |r, rec, prev| {
        if n_u == 0 {
            return Ok(None);
        }
        if let Some(prev) = prev {
            let g = serde_json::from_slice(&std::fs::read(r.path(GENERATOR_FILE))?)?;
            *rec = StageRecord { seconds: 0.0, resumed: true, ..prev };
            return Ok(Some(g));
        }
        let g = train_generator(cfg.generator, &latent.features(), &cfg.generators, gen_seed)?;
        r.write(rec, GENERATOR_FILE, &serde_json::to_vec_pretty(&g)?)?;
        Ok(Some(g))
    })?;

    let (generated, labels, augmentation) = run.stage("label", None, |r, rec, _| {
        let generated = match &generator {
            Some(g) => g.sample(n_u, cfg.stage_seed("sample"))?,
            None => Matrix::zeros((0, latent.n_cols())),
        };
        let (_, aug, labels) = label_generated(&latent, &generated, &cfg.semisup, cfg.stage_seed("label"))?;
        let summary = AugmentationSummary {
            cluster_count: aug.cluster_count,
            assigned: aug.assigned_count(),
            skipped: aug.skipped_count(),
            scrubbed: aug.scrubbed_count(),
            per_cluster_log: aug.per_cluster_log.clone(),
        };
        r.write(rec, AUGMENTATION_FILE, &serde_json::to_vec_pretty(&summary)?)?;
        Ok((generated, labels, summary))
    })?;

    let report = run.stage("evaluate", None, |_, _, _| {
        let mut notes = Vec::new();
        let (metrics, details) = if n_u == 0 {
            notes.push("no generated rows: metrics skipped".to_string());
            (None, None)
        } else {
            let e = evaluate(&latent.features(), &generated.view(), cfg.stage_seed("evaluate"))?;
            (Some(e.metrics), Some(e.details))
        };
        let efficiency = if cfg.efficiency && n_u > 0 {
            let train = Dataset::new(generated.clone(), labels.clone(), latent.column_names().to_vec())?;
            match train_efficiency_models(&train, &latent, cfg.stage_seed("efficiency")) {
                Ok(scores) => Some(scores),
                Err(e) => {
                    notes.push(format!("efficiency skipped: {e}"));
                    None
                }
            }
        } else {
            None
        };
        let cross_validation = if cfg.cv_folds >= 2 {
            Some(cross_validate(&latent, cfg.generator, &cfg.generators, &cfg.semisup, cfg.cv_folds, cfg.stage_seed("cross_validate"))?)
        } else {
            None
        };
        Ok(PipelineReport {
            generator: cfg.generator,
            latent_dim: ae.latent_dim,
            labeled_rows: n_l,
            generated_rows: n_u,
            metrics_status: if metrics.is_some() { "computed" } else { "skipped" }.to_string(),
            metrics,
            metric_details: details,
            generated_label_counts: count_labels(&labels),
            augmentation: Some(augmentation),
            efficiency,
            cross_validation,
            selection,
            generator_warnings: generator.as_ref().map(|g| g.history().warnings.clone()).unwrap_or_default(),
            notes,
        })
    })?;

    run.stage("write", None, |r, rec, _| {
        let decoded = ae.decode(&generated.view())?;
        let decoded = Dataset::new(decoded, labels.clone(), data.column_names().to_vec())?;
        let full = data.concat(&decoded)?;
        let provenance: Vec<String> = (0..full.n_rows())
            .map(|i| if i < n_l { "original" } else { "generated" }.to_string())
            .collect();
        let mut csv = Vec::new();
        full.write_csv_with(&mut csv, &cfg.label_column, Some((PROVENANCE_COLUMN, &provenance)))?;
        r.write(rec, DATASET_FILE, &csv)?;
        r.write(rec, REPORT_FILE, &serde_json::to_vec_pretty(&report)?)?;
        Ok(())
    })?;

    let produced = run.manifest.artifact_paths();
    for name in RUN_ARTIFACTS {
        if !produced.iter().any(|p| p == name) && run.path(name).exists() {
            std::fs::remove_file(run.path(name))?;
        }
    }
    run.write_manifest()?;
    Ok(run.manifest)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub name: String,
    pub path: PathBuf,
    #[serde(default = "default_label_column")]
    pub label_column: String,
}

fn default_label_column() -> String {
    "label".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchmarkConfig {
    pub datasets: Vec<DatasetSpec>,
    pub generators: Vec<GeneratorKind>,
    pub folds: usize,
    /// Shared settings; its dataset, generator and cv fields are ignored.
    pub pipeline: PipelineConfig,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            datasets: Vec::new(),
            generators: GeneratorKind::ALL.to_vec(),
            folds: 5,
            pipeline: PipelineConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkCell {
    pub dataset: String,
    pub generator: GeneratorKind,
    pub metrics: Option<MetricReport>,
    pub cross_validation: Option<CrossValidatedScores>,
    pub efficiency: Option<BTreeMap<String, f64>>,
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub latent_dims: BTreeMap<String, usize>,
    pub cells: Vec<BenchmarkCell>,
    pub votes: Option<VoteTally>,
    pub strict_votes: Option<VoteTally>,
    pub errors: Vec<String>,
}

fn benchmark_cell(name: &str, kind: GeneratorKind, latent: &Dataset, cfg: &BenchmarkConfig) -> BenchmarkCell {
    let p = &cfg.pipeline;
    let mut cell = BenchmarkCell {
        dataset: name.to_string(),
        generator: kind,
        metrics: None,
        cross_validation: None,
        efficiency: None,
        errors: Vec::new(),
    };
    let s = seed::derive_named(p.seed, &format!("{name}/{kind}"));
    let generated = train_generator(kind, &latent.features(), &p.generators, seed::derive_named(s, "generate"))
        .and_then(|g| g.sample(p.generated_count.unwrap_or(latent.n_rows()), seed::derive_named(s, "sample")));
    match generated {
        Ok(u) => {
            match evaluate(&latent.features(), &u.view(), seed::derive_named(s, "evaluate")) {
                Ok(e) => cell.metrics = Some(e.metrics),
                Err(e) => cell.errors.push(format!("metrics: {e}")),
            }
            let efficiency = label_generated(latent, &u, &p.semisup, seed::derive_named(s, "label")).and_then(|(_, _, labels)| {
                let train = Dataset::new(u.clone(), labels, latent.column_names().to_vec())?;
                train_efficiency_models(&train, latent, seed::derive_named(s, "efficiency"))
            });
            match efficiency {
                Ok(v) => cell.efficiency = Some(v),
                Err(e) => cell.errors.push(format!("efficiency: {e}")),
            }
        }
        Err(e) => cell.errors.push(format!("generate: {e}")),
    }
    if cfg.folds >= 2 {
        match cross_validate(latent, kind, &p.generators, &p.semisup, cfg.folds, seed::derive_named(s, "cross_validate")) {
            Ok(v) => cell.cross_validation = Some(v),
            Err(e) => cell.errors.push(format!("cross-validation: {e}")),
        }
    }
    cell
}

/// Every dataset × generator cell. Failures are recorded per cell and the
/// run continues; `benchmark.json` and `benchmark.txt` go to the output dir.
pub fn run_benchmark(cfg: &BenchmarkConfig) -> Result<BenchmarkReport> {
    if cfg.datasets.is_empty() {
        return Err(Error::Config("benchmark needs at least one dataset".into()));
    }
    if cfg.generators.is_empty() {
        return Err(Error::Config("benchmark needs at least one generator".into()));
    }
    cfg.pipeline.validate_settings()?;
    std::fs::create_dir_all(&cfg.pipeline.out_dir)?;
    let mut report = BenchmarkReport {
        latent_dims: BTreeMap::new(),
        cells: Vec::new(),
        votes: None,
        strict_votes: None,
        errors: Vec::new(),
    };
    for spec in &cfg.datasets {
        let reduced = load_labeled(&spec.path, &spec.label_column).and_then(|data| {
            let (ae, _) = reduce(&data, &cfg.pipeline, seed::derive_named(cfg.pipeline.stage_seed("reduce"), &spec.name))?;
            latent_dataset(&ae, &data)
        });
        let latent = match reduced {
            Ok(l) => l,
            Err(e) => {
                report.errors.push(format!("{}: {e}", spec.name));
                continue;
            }
        };
        report.latent_dims.insert(spec.name.clone(), latent.n_cols());
        for &kind in &cfg.generators {
            log::info!("benchmark cell {} / {kind}", spec.name);
            report.cells.push(benchmark_cell(&spec.name, kind, &latent, cfg));
        }
    }
    let values: BTreeMap<(String, String), _> = report
        .cells
        .iter()
        .filter_map(|c| c.metrics.map(|m| ((c.generator.to_string(), c.dataset.clone()), m.vote_values())))
        .collect();
    if !values.is_empty() {
        report.votes = vote(&values, &VotePolicy::default()).map_err(|e| report.errors.push(format!("vote: {e}"))).ok();
        report.strict_votes = vote(&values, &VotePolicy::strict()).map_err(|e| report.errors.push(format!("strict vote: {e}"))).ok();
    }
    let out = &cfg.pipeline.out_dir;
    std::fs::write(out.join(BENCHMARK_JSON), serde_json::to_vec_pretty(&report)?)?;
    std::fs::write(out.join(BENCHMARK_TABLE), render_tables(&report))?;
    Ok(report)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"))
}

/// Plain-text tables derived from a benchmark report.
pub fn render_tables(report: &BenchmarkReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "Comparison metrics (generated vs real latent rows)");
    let _ = writeln!(
        s,
        "{:<12} {:<6} {:>9} {:>9} {:>11} {:>9} {:>9} {:>12} {:>9} {:>9}",
        "dataset", "gen", "ks_D", "ks_p", "wasserstein", "pearson", "coverage", "gmm_loglik", "lr_aauc", "svm_aauc"
    );
    for c in &report.cells {
        let m = c.metrics;
        let _ = writeln!(
            s,
            "{:<12} {:<6} {:>9} {:>9} {:>11} {:>9} {:>9} {:>12} {:>9} {:>9}",
            c.dataset,
            c.generator.name(),
            fmt_opt(m.map(|m| m.ks_d)),
            fmt_opt(m.map(|m| m.ks_p)),
            fmt_opt(m.map(|m| m.wasserstein)),
            fmt_opt(m.map(|m| m.pearson_similarity)),
            fmt_opt(m.map(|m| m.range_coverage)),
            fmt_opt(m.map(|m| m.gmm_loglik)),
            fmt_opt(m.map(|m| m.detection_lr_aauc)),
            fmt_opt(m.map(|m| m.detection_svm_aauc)),
        );
    }
    for (title, tally) in [("Votes (default policy)", &report.votes), ("Votes (strict policy)", &report.strict_votes)] {
        if let Some(t) = tally {
            let totals: Vec<String> = t.totals.iter().map(|(g, v)| format!("{g} {v}")).collect();
            let _ = writeln!(s, "\n{title}: {} | winner {}", totals.join(", "), t.winner);
        }
    }
    let _ = writeln!(s, "\nDiscriminator (stratified k-fold)");
    let _ = writeln!(s, "{:<12} {:<6} {:>9} {:>9} {:>9} {:>9} {:>9}", "dataset", "gen", "accuracy", "precision", "recall", "f1", "roc_auc");
    for c in &report.cells {
        let cv = c.cross_validation.as_ref();
        let _ = writeln!(
            s,
            "{:<12} {:<6} {:>9} {:>9} {:>9} {:>9} {:>9}",
            c.dataset,
            c.generator.name(),
            fmt_opt(cv.map(|v| v.accuracy)),
            fmt_opt(cv.map(|v| v.precision)),
            fmt_opt(cv.map(|v| v.recall)),
            fmt_opt(cv.map(|v| v.f1)),
            fmt_opt(cv.and_then(|v| v.roc_auc)),
        );
    }
    let _ = writeln!(s, "\nML efficiency (train on generated, test on real)");
    let _ = writeln!(s, "{:<12} {:<6} {:>9} {:>9} {:>9} {:>9}", "dataset", "gen", "adaboost", "dtree", "logreg", "mlp");
    for c in &report.cells {
        let get = |k: &str| fmt_opt(c.efficiency.as_ref().and_then(|e| e.get(k).copied()));
        let _ = writeln!(
            s,
            "{:<12} {:<6} {:>9} {:>9} {:>9} {:>9}",
            c.dataset,
            c.generator.name(),
            get("adaboost"),
            get("dtree"),
            get("logreg"),
            get("mlp")
        );
    }
    let errors: Vec<String> = report
        .errors
        .iter()
        .cloned()
        .chain(report.cells.iter().flat_map(|c| c.errors.iter().map(move |e| format!("{}/{}: {e}", c.dataset, c.generator))))
        .collect();
    if !errors.is_empty() {
        let _ = writeln!(s, "\nErrors");
        for e in errors {
            let _ = writeln!(s, "  {e}");
        }
    }
    s
}
