//! Reproducible experiment commands over the `multiplex` library.

pub mod commands;
pub mod config;

use std::path::PathBuf;

pub use commands::{run, Cli, Command};
pub use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] multiplex::Error),
    #[error("{origin}:{line}: {message}")]
    Config {
        origin: String,
        line: usize,
        message: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Invalid(String),
    #[error("gradient check failed: {0}")]
    GradCheck(String),
}
