//! Experiment runner for the `ecosim-core` simulation library.

pub mod commands;
pub mod config;
pub mod error;
pub mod experiments;
pub mod output;

pub use config::{ConfigFile, ExperimentConfig};
pub use error::{CliError, Result};
