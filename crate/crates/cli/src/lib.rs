//! Experiment harness for representation-gap studies: config parsing,
//! orchestration of the core toolkit and CSV/JSON result files.

pub mod args;
pub mod build;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use args::{Cli, Command};
pub use commands::run;
pub use config::Config;
pub use error::{exit, CliError};
