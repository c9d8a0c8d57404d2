//! Batch front end: JSON experiment configs in, JSON and CSV tables out.
//!
//! Floats in CSV output use Rust's `Display`, the shortest decimal that
//! round-trips to the same `f64`; infinities print as `inf`.

pub mod commands;
pub mod config;
pub mod verify;

pub use commands::{emit, run, summary_path, Command, Output};
pub use config::{parse, CliError, Format, Globals};
