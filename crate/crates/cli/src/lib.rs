//! Command-line front end for `wvsim-core`: run configs, presets, CSV output
//! and the figure-reproduction subcommands.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::{cmd_amplification, cmd_check, cmd_profile, cmd_speckle, CommandOutput};
pub use config::{KeyValues, RunConfig};
pub use error::CliError;
