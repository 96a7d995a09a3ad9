//! Experiment driver around `dualstop-core`: JSON configuration with
//! presets, CSV/JSON emission at full round-trip precision, and the four
//! subcommands behind the `dualstop` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;

pub use commands::{
    cmd_minimize, cmd_profile, cmd_value, cmd_verify, MinimizeReport, ProfileReport, ValueReport,
    VerifyReport,
};
pub use config::{resolve, ConfigFile, ExperimentConfig, Overrides};
pub use error::{CliError, Result};
