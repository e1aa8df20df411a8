//! Batch driver: configuration, command dispatch, CSV/JSON results and SVG
//! plots.

pub mod commands;
pub mod config;
pub mod output;
pub mod plot;

pub use commands::run;
pub use config::{parse_argv, parse_config, Args, Command, RunConfig};

use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io { path: path.display().to_string(), source }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) => 2,
            Self::Numerical(_) | Self::Io { .. } => 1,
        }
    }
}
