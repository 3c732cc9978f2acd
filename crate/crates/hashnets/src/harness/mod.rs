//! Experiment harness: dataset ingestion, architecture sizing, classifier
//! training, and the CSV-emitting verification suites behind the CLI.

pub mod arch;
pub mod cli;
pub mod commands;
pub mod dataset;
pub mod synth;
pub mod train;
