//! Synthetic-data framework for obsolescence prediction on small tabular
//! datasets: autoencoder reduction, latent-size selection, generative
//! augmentation, cluster-gated pseudo-labelling and evaluation.

pub mod autoencoder;
pub mod data;
pub mod error;
pub mod eval;
pub mod generators;
pub mod info;
pub mod linalg;
pub mod ml;
pub mod nn;
pub mod pipeline;
pub mod scalar;
pub mod seed;
pub mod semisup;
pub mod topsis;

pub use error::{Error, ErrorKind, Result};
pub use scalar::Scalar;

/// Default double-precision aliases.
pub type Matrix = linalg::Matrix<f64>;
pub type Vector = linalg::Vector<f64>;
pub type Dataset = data::Dataset<f64>;
pub type Network = nn::NetworkParams<f64>;
