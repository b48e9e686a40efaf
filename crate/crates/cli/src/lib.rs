//! Command-line driver for ifgen: `generate`, `explain` and `serve`.

pub mod config;
pub mod data;
pub mod error;
pub mod explain;
pub mod generate;
pub mod serve;

pub use error::CliError;
