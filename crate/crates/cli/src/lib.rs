//! Batch front end: configuration, command dispatch and artifact files.

pub mod commands;
pub mod config;
pub mod error;

pub use commands::{run, Command, Outcome};
pub use config::RunConfig;
pub use error::CliError;
