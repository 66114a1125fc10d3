//! File formats and command drivers behind the `ellcov` binary.
//!
//! The binary itself is a thin wrapper: every piece of behavior — matrix
//! and sample-file parsing and emission, scenario configuration, and the
//! four command drivers — lives here so it can be exercised directly by
//! tests.

pub mod commands;
pub mod formats;
pub mod scenario;
