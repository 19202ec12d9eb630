//! Library half of the `thzbeam` command-line tool: experiment spec
//! parsing, seeded experiment runners, and deterministic CSV/JSON output.
//!
//! The binary in `main.rs` is a thin argument-parsing shell over this
//! crate; integration tests drive the same entry points directly.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod seed;

pub use config::ExperimentFile;
pub use error::{CliError, Result};
pub use experiments::{run_experiment, RunSettings};
