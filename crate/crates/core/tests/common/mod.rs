#![allow(dead_code)]

use std::path::Path;

use ndarray::Array2;
use obsolescence::data::Dataset;
use obsolescence::generators::{FlowConfig, GanConfig, GeneratorConfig, VaeConfig};
use obsolescence::linalg::standard_normal;
use obsolescence::pipeline::PipelineConfig;
use obsolescence::seed;

/// Two classes on a noisy 2-D manifold embedded in `cols` columns.
pub fn toy_dataset(rows: usize, cols: usize, seed_value: u64) -> Dataset {
    let mut rng = seed::rng(seed_value);
    let base = standard_normal::<f64>(rows, 2, &mut rng);
    let noise = standard_normal::<f64>(rows, cols, &mut rng) * 0.05;
    let mut x = Array2::zeros((rows, cols));
    let mut y = Vec::with_capacity(rows);
    for i in 0..rows {
        let class = i32::from(i % 3 == 0);
        let shift = if class == 1 { 3.0 } else { 0.0 };
        for j in 0..cols {
            let w = (j as f64 + 1.0) / cols as f64;
            x[[i, j]] = w * (base[[i, 0]] + shift) + (1.0 - w) * base[[i, 1]] + noise[[i, j]] + 10.0 * j as f64;
        }
        y.push(class);
    }
    Dataset::with_default_names(x, y).unwrap()
}

pub fn write_toy(dir: &Path, name: &str, rows: usize, cols: usize, seed_value: u64) -> std::path::PathBuf {
    let path = dir.join(name);
    toy_dataset(rows, cols, seed_value).save_csv(&path, "label").unwrap();
    path
}

pub fn fast_generators() -> GeneratorConfig {
    GeneratorConfig {
        flow: FlowConfig {
            coupling_layers: 4,
            hidden: 16,
            learning_rate: 2e-3,
            batch_size: 64,
            max_epochs: 15,
            ..FlowConfig::default()
        },
        vae: VaeConfig {
            hidden: vec![16, 16],
            latent_dim: 4,
            batch_size: 64,
            epochs: 15,
            ..VaeConfig::default()
        },
        gan: GanConfig {
            noise_dim: 8,
            generator_hidden: vec![16, 16],
            discriminator_hidden: vec![16, 16],
            batch_size: 60,
            epochs: 15,
            ..GanConfig::default()
        },
    }
}

/// Small but complete pipeline settings for a `toy_dataset` file.
pub fn fast_config(dataset: &Path, out_dir: &Path) -> PipelineConfig {
    let mut cfg = PipelineConfig {
        dataset: dataset.to_path_buf(),
        out_dir: out_dir.to_path_buf(),
        m_values: vec![1, 2],
        width_choices: vec![8],
        generators: fast_generators(),
        ..PipelineConfig::default()
    };
    cfg.autoencoder.max_epochs = 40;
    cfg.semisup.alpha = 20.0;
    cfg.semisup.forest.tree_count = 15;
    cfg
}
