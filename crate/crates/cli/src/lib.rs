//! Batch evaluation front end: tensor files, run configuration, the
//! `metrics`, `sweep`, `match` and `synth` subcommands and their canonical
//! output formats.

pub mod cli;
pub mod commands;
pub mod config;
pub mod report;
pub mod tensor;

pub use cli::{run, with_threads, Cli};
pub use commands::{cmd_match, cmd_metrics, cmd_sweep, cmd_synth, compute, Inputs, Metric, OutputFormat, Sweep};
pub use config::{CliError, PairingMode, RunConfig, WeightingMode};
