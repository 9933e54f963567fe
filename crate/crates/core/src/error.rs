use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate labels: training data must contain both classes")]
    DegenerateLabels,

    #[error(
        "SMO did not converge after {passes} passes (max KKT violation {kkt_violation:.3e}, {support_vectors} support vectors)"
    )]
    Convergence {
        passes: usize,
        kkt_violation: f64,
        support_vectors: usize,
    },

    #[error("degenerate model: {0}")]
    DegenerateModel(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("problem size {size} exceeds oracle limit {limit}")]
    SizeLimit { size: usize, limit: usize },

    #[error("oracle failure: {0}")]
    Oracle(String),

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("configuration error: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("feature manifest mismatch: model has [{}], extractor has [{}]", found.join(", "), expected.join(", "))]
    ManifestMismatch {
        expected: Vec<String>,
        found: Vec<String>,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(vec![msg.into()])
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::DegenerateLabels | Error::Convergence { .. } | Error::DegenerateModel(_) => 3,
            Error::ManifestMismatch { .. } => 4,
            _ => 2,
        }
    }
}
