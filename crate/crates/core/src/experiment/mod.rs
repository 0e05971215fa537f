//! Configuration, experiment drivers and file emitters behind the CLI.

pub mod config;
pub mod output;
pub mod runner;

pub use config::{load_config, Config, ConfigError};
pub use output::{write_csv, write_snapshot, OutputError};
pub use runner::{
    preset_baldwin, run_single, run_sweep, Execution, RunArtifacts, Snapshot, SweepRow,
};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Output(#[from] OutputError),
}

impl Error {
    /// 2 for configuration problems, 1 for everything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Config(_) => 2,
            Error::Output(_) => 1,
        }
    }
}
