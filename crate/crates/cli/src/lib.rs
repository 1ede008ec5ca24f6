//! Command-line front end: configuration, data builders and experiment
//! orchestration over `nfs-core`.

pub mod commands;
pub mod config;
mod selfcheck;

pub use commands::{run, Command, Failure, Invocation};
pub use config::{parse_config, RunConfig};
