//! Experiment runner for `amdim-core`: flat config files in, stamped CSV and
//! JSON out.

pub mod commands;
pub mod config;
pub mod output;
pub mod selftest;

pub use commands::Outcome;
pub use config::{ConfigError, RawConfig};
pub use output::Sink;
