//! Batch front-end for the `ldp-qif` library: capacity sweeps, local
//! hashing ASR comparisons, refinement verdicts, simulations, trade-off
//! exports and refinement-family checks, written as CSV or JSON.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod svg;

pub use args::Cli;
pub use commands::run;
pub use error::{CliError, CliResult};
