use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use obsolescence::data::{default_names, load_csv, load_csv_ignoring, Dataset, UNLABELED};
use obsolescence::eval::evaluate;
use obsolescence::generators::{train_generator, GeneratorConfig, GeneratorKind};
use obsolescence::ml::train_efficiency_models;
use obsolescence::pipeline::{self, BenchmarkConfig, DatasetSpec, PipelineConfig, PROVENANCE_COLUMN};
use obsolescence::semisup::{self_train, ClusterMode, SemiSupConfig};
use obsolescence::topsis::{self, Direction};
use obsolescence::{Error, Matrix, Result};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "obsolescence", version, about = "Latent-space augmentation and self-training for obsolescence data")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Base seed [default: 42, or the config value]
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory [default: out, or the config value]
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// JSON configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Name of the label column in input CSVs
    #[arg(long, global = true, default_value = "label")]
    label_column: String,
    /// Log progress to stderr (repeat for more)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand)]
enum Command {
    /// Train the autoencoder sweep, pick a latent size and encode the data
    Reduce {
        /// Input CSV with a label column
        #[arg(long)]
        data: PathBuf,
        /// Skip TOPSIS and use this latent size
        #[arg(long)]
        latent_dim: Option<usize>,
        /// Latent sizes to sweep [default: 1..n-1]
        #[arg(long, value_delimiter = ',')]
        m_values: Vec<usize>,
        /// Hidden widths tried for each latent size
        #[arg(long, value_delimiter = ',')]
        widths: Vec<usize>,
    },
    /// Rank the rows of a decision matrix CSV
    Topsis {
        /// Decision matrix CSV, one alternative per row
        #[arg(long)]
        matrix: PathBuf,
        /// Criteria columns to use [default: every column except --id-column]
        #[arg(long, value_delimiter = ',')]
        columns: Vec<String>,
        /// benefit or cost per criterion [default: all cost]
        #[arg(long, value_delimiter = ',')]
        directions: Vec<Direction>,
        /// Criterion weights, renormalised [default: equal]
        #[arg(long, value_delimiter = ',')]
        weights: Vec<f64>,
        /// Column naming each alternative
        #[arg(long)]
        id_column: Option<String>,
    },
    /// Train a generator on (latent) rows and sample new ones
    Generate {
        /// Input CSV
        #[arg(long)]
        data: PathBuf,
        /// flow, vae or gan
        #[arg(long, default_value = "flow")]
        generator: GeneratorKind,
        /// Rows to sample [default: input row count]
        #[arg(long)]
        count: Option<usize>,
    },
    /// Self-train on labeled and generated rows
    Label {
        /// Fully labeled CSV
        #[arg(long)]
        labeled: PathBuf,
        /// Generated rows CSV
        #[arg(long)]
        generated: PathBuf,
        /// Rows per cluster [default: 100]
        #[arg(long)]
        alpha: Option<f64>,
        /// formula or silhouette
        #[arg(long)]
        mode: Option<ClusterMode>,
        /// Labeled output CSV [default: <out-dir>/labeled.csv]
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-cluster log [default: <out-dir>/augmentation.json]
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Compare real and synthetic rows on every metric
    Evaluate {
        /// Real rows CSV
        #[arg(long)]
        real: PathBuf,
        /// Synthetic rows CSV
        #[arg(long)]
        synthetic: PathBuf,
    },
    /// Train classifiers on one labeled set and score them on another
    Efficiency {
        /// Labeled training CSV
        #[arg(long)]
        train: PathBuf,
        /// Labeled test CSV
        #[arg(long)]
        test: PathBuf,
    },
    /// Full run: reduce, generate, self-train, decode and report
    Pipeline {
        /// Input CSV [default: the config value]
        #[arg(long)]
        data: Option<PathBuf>,
        /// flow, vae or gan [default: flow]
        #[arg(long)]
        generator: Option<GeneratorKind>,
        /// Skip TOPSIS and use this latent size
        #[arg(long)]
        latent_dim: Option<usize>,
        /// Rows to generate [default: labeled row count]
        #[arg(long)]
        generated_count: Option<usize>,
        /// Rows per cluster [default: 100]
        #[arg(long)]
        alpha: Option<f64>,
        /// formula or silhouette
        #[arg(long)]
        mode: Option<ClusterMode>,
        /// Cross-validate the discriminator with this many folds (0 = off)
        #[arg(long)]
        cv_folds: Option<usize>,
        /// Reuse stages whose inputs are unchanged
        #[arg(long)]
        resume: bool,
    },
    /// Every dataset against every generator
    Benchmark {
        /// name=path, repeatable
        #[arg(long = "dataset", value_parser = parse_dataset)]
        datasets: Vec<(String, PathBuf)>,
        /// Generators to compare [default: all]
        #[arg(long, value_delimiter = ',')]
        generators: Vec<GeneratorKind>,
        /// Cross-validation folds [default: 5]
        #[arg(long)]
        folds: Option<usize>,
    },
}

fn parse_dataset(s: &str) -> std::result::Result<(String, PathBuf), String> {
    match s.split_once('=') {
        Some((name, path)) if !name.is_empty() && !path.is_empty() => Ok((name.to_string(), PathBuf::from(path))),
        _ => Err(format!("expected name=path, got `{s}`")),
    }
}

fn read_config<T: serde::de::DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("invalid config {}: {e}", p.display())))
        }
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, serde_json::to_vec_pretty(value)?)?;
    Ok(())
}

fn pipeline_config(common: &Common) -> Result<PipelineConfig> {
    let mut cfg: PipelineConfig = read_config(common.config.as_deref())?;
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(o) = &common.out_dir {
        cfg.out_dir = o.clone();
    }
    if common.config.is_none() || common.label_column != "label" {
        cfg.label_column = common.label_column.clone();
    }
    Ok(cfg)
}

fn read_matrix(path: &Path, id_column: Option<&str>, columns: &[String]) -> Result<(Vec<String>, Vec<String>, Matrix)> {
    let mut rdr = csv::Reader::from_path(path)?;
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let id_idx = match id_column {
        Some(name) => Some(headers.iter().position(|h| h == name).ok_or_else(|| Error::Schema(format!("column `{name}` not found")))?),
        None => None,
    };
    let picked: Vec<usize> = if columns.is_empty() {
        (0..headers.len()).filter(|&j| Some(j) != id_idx).collect()
    } else {
        columns
            .iter()
            .map(|c| headers.iter().position(|h| h == c).ok_or_else(|| Error::Schema(format!("column `{c}` not found"))))
            .collect::<Result<_>>()?
    };
    let mut ids = Vec::new();
    let mut values = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        ids.push(id_idx.map_or_else(|| r.to_string(), |j| record[j].trim().to_string()));
        for &j in &picked {
            let cell = record[j].trim();
            values.push(cell.parse::<f64>().map_err(|_| Error::Parse {
                row: r + 1,
                column: headers[j].clone(),
                message: format!("`{cell}` is not a real number"),
            })?);
        }
    }
    let m = Matrix::from_shape_vec((ids.len(), picked.len()), values).map_err(|e| Error::Dimension(e.to_string()))?;
    Ok((picked.iter().map(|&j| headers[j].clone()).collect(), ids, m))
}

#[derive(Serialize)]
struct TopsisOutput {
    criteria: Vec<String>,
    alternatives: Vec<String>,
    closeness: Vec<f64>,
    ranking: Vec<String>,
    best: String,
}

fn run(cli: Cli) -> Result<()> {
    let common = &cli.common;
    let seed = common.seed.unwrap_or(42);
    let out_dir = common.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"));
    match cli.command {
        Command::Reduce { data, latent_dim, m_values, widths } => {
            let mut cfg = pipeline_config(common)?;
            if latent_dim.is_some() {
                cfg.latent_dim = latent_dim;
            }
            if !m_values.is_empty() {
                cfg.m_values = m_values;
            }
            if !widths.is_empty() {
                cfg.width_choices = widths;
            }
            let dataset: Dataset = load_csv(&data, &cfg.label_column)?;
            let (model, selection) = pipeline::reduce(&dataset, &cfg, cfg.stage_seed("reduce"))?;
            fs::create_dir_all(&cfg.out_dir)?;
            write_json(&cfg.out_dir.join(pipeline::AUTOENCODER_FILE), &model)?;
            if let Some(s) = &selection {
                write_json(&cfg.out_dir.join(pipeline::SELECTION_FILE), s)?;
                for (r, res) in s.results.iter().enumerate() {
                    println!("m={:<3} rmse={:.4} mi={:.4} info_loss={:.4} C={:.4}", res.latent_dim, res.rmse, res.mutual_info, res.info_loss, s.closeness[r]);
                }
            }
            let z = model.encode(&dataset.features())?;
            let latent = Dataset::new(z, dataset.labels().to_vec(), default_names(model.latent_dim))?;
            latent.save_csv(cfg.out_dir.join("latent.csv"), &cfg.label_column)?;
            println!("selected latent size {}", model.latent_dim);
        }
        Command::Topsis { matrix, columns, directions, weights, id_column } => {
            let (criteria, ids, m) = read_matrix(&matrix, id_column.as_deref(), &columns)?;
            let n = criteria.len();
            let directions = if directions.is_empty() { vec![Direction::Cost; n] } else { directions };
            let weights = if weights.is_empty() { topsis::equal_weights(n) } else { weights };
            let d = topsis::rank(&m.view(), &weights, &directions)?;
            for (i, c) in d.ranked() {
                println!("{:<8} C={c:.4}", ids[i]);
            }
            let out = TopsisOutput {
                criteria,
                best: ids[d.best()].clone(),
                ranking: d.ranking.iter().map(|&i| ids[i].clone()).collect(),
                closeness: d.closeness.clone(),
                alternatives: ids,
            };
            write_json(&out_dir.join("topsis.json"), &out)?;
        }
        Command::Generate { data, generator, count } => {
            let cfg: GeneratorConfig = read_config::<PipelineConfig>(common.config.as_deref())?.generators;
            let dataset: Dataset = load_csv(&data, &common.label_column)?;
            let model = train_generator(generator, &dataset.features(), &cfg, obsolescence::seed::derive_named(seed, "generate"))?;
            let n = count.unwrap_or(dataset.n_rows());
            let u = model.sample(n, obsolescence::seed::derive_named(seed, "sample"))?;
            fs::create_dir_all(&out_dir)?;
            write_json(&out_dir.join(pipeline::GENERATOR_FILE), &model)?;
            Dataset::new(u, vec![UNLABELED; n], dataset.column_names().to_vec())?.save_csv(out_dir.join("generated.csv"), &common.label_column)?;
            for w in &model.history().warnings {
                eprintln!("warning: {w}");
            }
            println!("wrote {n} rows to {}", out_dir.join("generated.csv").display());
        }
        Command::Label { labeled, generated, alpha, mode, out, log } => {
            let mut cfg: SemiSupConfig = read_config::<PipelineConfig>(common.config.as_deref())?.semisup;
            cfg.seed = seed;
            if let Some(a) = alpha {
                cfg.alpha = a;
            }
            if let Some(m) = mode {
                cfg.cluster_mode = m;
            }
            let l: Dataset = load_csv(&labeled, &common.label_column)?;
            let u: Dataset = load_csv(&generated, &common.label_column)?;
            let (_, aug) = self_train(&l, &u, &cfg)?;
            let out = out.unwrap_or_else(|| out_dir.join("labeled.csv"));
            let log = log.unwrap_or_else(|| out_dir.join("augmentation.json"));
            if let Some(parent) = out.parent() {
                fs::create_dir_all(parent)?;
            }
            let d = Dataset::new(aug.features.clone(), aug.labels.clone(), l.column_names().to_vec())?;
            let provenance: Vec<String> = aug.provenance.iter().map(ToString::to_string).collect();
            d.write_csv_with(fs::File::create(&out)?, &common.label_column, Some((PROVENANCE_COLUMN, &provenance)))?;
            write_json(
                &log,
                &serde_json::json!({
                    "cluster_count": aug.cluster_count,
                    "assigned": aug.assigned_count(),
                    "skipped": aug.skipped_count(),
                    "scrubbed": aug.scrubbed_count(),
                    "scrubbed_per_pass": aug.scrubbed_per_pass,
                    "per_cluster_log": aug.per_cluster_log,
                }),
            )?;
            println!("assigned {}, skipped {}, scrubbed {}", aug.assigned_count(), aug.skipped_count(), aug.scrubbed_count());
        }
        Command::Evaluate { real, synthetic } => {
            let r: Dataset = load_csv_ignoring(&real, &common.label_column, &[PROVENANCE_COLUMN])?;
            let s: Dataset = load_csv_ignoring(&synthetic, &common.label_column, &[PROVENANCE_COLUMN])?;
            let e = evaluate(&r.features(), &s.features(), obsolescence::seed::derive_named(seed, "evaluate"))?;
            write_json(&out_dir.join(pipeline::REPORT_FILE), &e.metrics)?;
            write_json(&out_dir.join("metric_details.json"), &e.details)?;
            println!("{}", serde_json::to_string_pretty(&e.metrics)?);
        }
        Command::Efficiency { train, test } => {
            let tr: Dataset = load_csv_ignoring(&train, &common.label_column, &[PROVENANCE_COLUMN])?;
            let te: Dataset = load_csv_ignoring(&test, &common.label_column, &[PROVENANCE_COLUMN])?;
            let scores: BTreeMap<String, f64> = train_efficiency_models(&tr, &te, obsolescence::seed::derive_named(seed, "efficiency"))?;
            write_json(&out_dir.join("efficiency.json"), &scores)?;
            for (k, v) in &scores {
                println!("{k:<9} {v:.4}");
            }
        }
        Command::Pipeline { data, generator, latent_dim, generated_count, alpha, mode, cv_folds, resume } => {
            let mut cfg = pipeline_config(common)?;
            if let Some(d) = data {
                cfg.dataset = d;
            }
            if let Some(g) = generator {
                cfg.generator = g;
            }
            if latent_dim.is_some() {
                cfg.latent_dim = latent_dim;
            }
            if generated_count.is_some() {
                cfg.generated_count = generated_count;
            }
            if let Some(a) = alpha {
                cfg.semisup.alpha = a;
            }
            if let Some(m) = mode {
                cfg.semisup.cluster_mode = m;
            }
            if let Some(k) = cv_folds {
                cfg.cv_folds = k;
            }
            cfg.resume |= resume;
            let manifest = pipeline::run_pipeline(&cfg)?;
            for s in &manifest.stages {
                println!("{:<9} {:>8.2}s{}", s.stage, s.seconds, if s.resumed { " (resumed)" } else { "" });
            }
            println!("outputs in {}", cfg.out_dir.display());
        }
        Command::Benchmark { datasets, generators, folds } => {
            let mut cfg: BenchmarkConfig = read_config(common.config.as_deref())?;
            if let Some(s) = common.seed {
                cfg.pipeline.seed = s;
            }
            if let Some(o) = &common.out_dir {
                cfg.pipeline.out_dir = o.clone();
            }
            for (name, path) in datasets {
                cfg.datasets.push(DatasetSpec {
                    name,
                    path,
                    label_column: common.label_column.clone(),
                });
            }
            if !generators.is_empty() {
                cfg.generators = generators;
            }
            if let Some(k) = folds {
                cfg.folds = k;
            }
            let report = pipeline::run_benchmark(&cfg)?;
            print!("{}", pipeline::render_tables(&report));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.common.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
