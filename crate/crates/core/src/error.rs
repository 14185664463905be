use thiserror::Error;

/// Errors raised across the framework.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("cannot stratify: class {class} has {count} rows, fewer than {folds} folds")]
    Stratification {
        class: i64,
        count: usize,
        folds: usize,
    },

    #[error("non-finite value in forward pass at layer {layer}")]
    Numeric { layer: usize },

    #[error("training diverged at epoch {epoch}: {message}")]
    TrainingDiverged { epoch: usize, message: String },

    #[error("normalization failed: criterion {criterion} has zero norm")]
    Normalization { criterion: usize },

    #[error("singular covariance in component {component} after regularization")]
    SingularCovariance { component: usize },

    #[error("undefined: {0}")]
    Undefined(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("report error: {0}")]
    Report(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse failure category, used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Numeric,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) => ErrorKind::Config,
            Error::Parse { .. }
            | Error::Schema(_)
            | Error::Dimension(_)
            | Error::Precondition(_)
            | Error::Stratification { .. }
            | Error::Normalization { .. }
            | Error::Undefined(_)
            | Error::Report(_)
            | Error::Io(_)
            | Error::Json(_)
            | Error::Csv(_) => ErrorKind::Data,
            Error::Numeric { .. }
            | Error::TrainingDiverged { .. }
            | Error::SingularCovariance { .. } => ErrorKind::Numeric,
            Error::Stage { source, .. } => source.kind(),
        }
    }

    /// Process exit code: 2 config, 3 data, 4 numeric/training.
    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            ErrorKind::Config => 2,
            ErrorKind::Data => 3,
            ErrorKind::Numeric => 4,
        }
    }

    pub(crate) fn in_stage(self, stage: &str) -> Error {
        Error::Stage {
            stage: stage.to_string(),
            source: Box::new(self),
        }
    }
}
