//! Configuration, run orchestration and serialization for the `sawomit`
//! command-line tool.

pub mod analysis;
pub mod config;
pub mod output;
pub mod plot;
pub mod run;

pub use config::{Config, ConfigError, Source};
pub use run::{run, Outcome, RunError};
