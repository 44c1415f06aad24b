//! Library half of the `ghostsim` command: scenario parsing, experiment
//! runners and output writers. `main.rs` only handles arguments and exit codes.

pub mod commands;
pub mod error;
pub mod output;
pub mod scenario;

pub use error::{CliError, CliResult};
