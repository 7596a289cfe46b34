use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("utility undefined for BS {bs} -> TU {tu}: SINR is zero")]
    ZeroSinr { bs: usize, tu: usize },

    #[error("singular matrix at BS {0}")]
    Singular(usize),

    #[error("constraint violated at slot {slot}: {detail}")]
    Inconsistent { slot: usize, detail: String },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("refusing to overwrite {0} (pass --force)")]
    Exists(PathBuf),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("toml error: {0}")]
    Toml(#[from] toml::de::Error),
}

impl Error {
    /// Short machine-readable tag, used by the CLI's one-line error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Config(_) | Error::Toml(_) => "config",
            Error::ZeroSinr { .. } => "zero_sinr",
            Error::Singular(_) => "singular",
            Error::Inconsistent { .. } => "inconsistent",
            Error::NonFinite(_) => "non_finite",
            Error::Exists(_) => "exists",
            Error::Checkpoint(_) => "checkpoint",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}
