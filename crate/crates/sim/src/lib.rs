//! Simulator for the refereed mechanism: configuration, the `mrm` command
//! line and the report formats it writes.
//!
//! Exit codes of the binary: 0 on success, 1 on IO failure or an exceeded
//! bench bound, 2 on a configuration error, 3 when an arbitration in `game`
//! or `arbitrate` caught a protocol violation.

pub mod cli;
pub mod config;
pub mod report;

pub use config::{ConfigError, RunConfig, Settings};
