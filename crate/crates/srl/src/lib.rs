//! File formats and the command-line front end of the semantic role
//! labeler in `srl_core`.

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod error;
pub mod files;

pub use cli::dispatch;
pub use error::{Error, ExitCode};
