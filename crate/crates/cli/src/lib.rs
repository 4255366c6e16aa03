//! Command-line front end: configuration, the train → trace → information
//! plane → figure pipeline, and the special-case verifier.

pub mod commands;
pub mod config;
pub mod error;
pub mod panels;
pub mod pipeline;
pub mod plot;
pub mod verify;

pub use commands::{repro, run, Cli};
pub use config::{ExperimentConfig, Overrides};
pub use error::{CliError, CliResult};
pub use panels::Panel;
