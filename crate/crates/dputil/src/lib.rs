//! Experiment harness around `dputil-core`: CSV ingest, JSON configs, the
//! parallel epsilon sweep, results files, SVG reports and model files.

pub mod config;
mod error;
pub mod ingest;
pub mod persist;
pub mod plots;
pub mod results;
pub mod sweep;

pub use error::{HarnessError, Result};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "DPUTIL_OUT_DIR";
