//! Configuration, orchestration and artifact output for the `elasticflow` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod plot;

pub use error::CliError;
