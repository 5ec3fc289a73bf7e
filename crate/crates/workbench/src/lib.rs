//! File formats, experiment configuration and the batch driver behind the
//! `fekete` binary.
//!
//! Every subcommand reads one [`config::ExperimentConfig`] (a flat
//! `key = value` file plus flag overrides) and writes CSV and JSON artifacts
//! into the output directory. Numbers in CSV files carry 17 significant
//! digits so they re-read to the same doubles.

pub mod config;
pub mod io;
pub mod run;
pub mod specs;
pub mod verify;

pub use config::{ConfigError, ExperimentConfig, Resolved};
pub use run::{run, Subcommand};
