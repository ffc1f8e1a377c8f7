//! Batch front end: read an instance document, run one command, emit a
//! deterministic JSON report.

pub mod commands;
pub mod document;
pub mod report;

pub use commands::{run, Command, RunOptions};
pub use report::Report;

/// Environment variable overriding the worker thread count.
pub const THREADS_ENV: &str = "KAPRANOV_THREADS";
