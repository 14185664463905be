//! Classical learners used for clustering, labelling and evaluation.

pub mod boost;
pub mod forest;
pub mod gmm;
pub mod isolation;
pub mod kmeans;
pub mod linear;
pub mod mlp;
pub mod preprocess;
pub mod silhouette;
pub mod tasks;
pub mod tree;

pub use boost::{adaboost_fit, AdaBoostConfig, AdaBoostModel};
pub use forest::{forest_fit, ForestConfig, ForestModel};
pub use gmm::{gmm_fit, gmm_fit_bic, GmmModel};
pub use isolation::{isolation_forest_filter, IsolationConfig, IsolationForestModel};
pub use kmeans::{kmeans_fit, KMeansModel};
pub use linear::{logistic_fit, svm_fit, LinearModel, LogisticConfig, SvmConfig};
pub use mlp::{mlp_fit, MlpClassifier, MlpConfig};
pub use preprocess::RobustPreprocessor;
pub use silhouette::silhouette;
pub use tasks::{linear_classifiers_for_detection, train_efficiency_models, DetectionScores};
pub use tree::{DecisionTree, MaxFeatures, TreeConfig};
