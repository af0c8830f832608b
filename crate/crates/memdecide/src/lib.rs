//! File formats, parallel sweeps and the `memdecide` command line on top of
//! [`memdecide_core`].

pub mod commands;
pub mod config;
pub mod deck;
pub mod error;
pub mod fixtures;
pub mod io;
pub mod svg;
pub mod sweep;

pub use commands::{run, Command, Outcome, RunOptions};
pub use error::{CliError, CliResult};
pub use memdecide_core as core;
