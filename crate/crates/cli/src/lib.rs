//! Scenario runner, configuration parsing and mesh/curve exporters for `s3flow`.

pub mod config;
pub mod io;
pub mod runner;

pub use config::{ConfigError, ConfigFile, Scenario};
pub use runner::{run_scenario, Outcome, RunOptions};
