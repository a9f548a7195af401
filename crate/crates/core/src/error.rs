use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} = {value} is outside the admissible range [{lo}, {hi}]")]
    Range {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("singular configuration: {0}")]
    Singular(String),

    /// Estimated sparsity is zero, so score matrices cannot be normalised.
    #[error("estimation failed: {0}")]
    Estimation(String),

    #[error(
        "points {first} and {second} are disconnected in the localization graph \
         (lambda = {lambda}); try a larger neighbourhood parameter"
    )]
    Connectivity {
        first: usize,
        second: usize,
        lambda: f64,
    },

    #[error("degenerate design: {0}")]
    DegenerateDesign(String),

    #[error("bandwidth {bandwidth} too small: only {effective} point(s) carry kernel weight")]
    BandwidthTooSmall { bandwidth: f64, effective: usize },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("validation error at `{path}`: {message}")]
    Validation { path: String, message: String },

    #[error("{}: {source}", path.display())]
    File {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn validation(path: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Validation {
            path: path.into(),
            message: msg.into(),
        }
    }

    pub(crate) fn file(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::File {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Process exit code used by the command-line front end:
    /// 2 for input/validation problems, 3 for numerical or connectivity failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Range { .. }
            | Error::Argument(_)
            | Error::Parse { .. }
            | Error::Validation { .. }
            | Error::DegenerateInput(_)
            | Error::File { .. }
            | Error::Io(_)
            | Error::Csv(_)
            | Error::Json(_) => 2,
            Error::Singular(_)
            | Error::Estimation(_)
            | Error::Connectivity { .. }
            | Error::DegenerateDesign(_)
            | Error::BandwidthTooSmall { .. } => 3,
        }
    }
}
