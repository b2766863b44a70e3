//! Scenario loading, run commands and file formats behind the `torus-lasso` binary.

pub mod app;
pub mod commands;
pub mod export;
pub mod scenario;

use thiserror::Error;

pub use app::run;
pub use commands::{cmd_cover, cmd_lasso, cmd_simulate, Overrides};
pub use export::{parse_tube_csv, TubeRow};
pub use scenario::ScenarioFile;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error("io: {0}")]
    Io(String),
    #[error("parse: {0}")]
    Parse(String),
    #[error("{0}")]
    Run(String),
}
