//! Scenario runner for the `onehomog-core` verification suites: a small
//! config format, one command per suite, and deterministic reports.

pub mod commands;
pub mod config;
pub mod report;

pub use commands::{run, run_command, COMMANDS};
pub use config::{ConfigError, ScenarioConfig};
pub use report::{Check, Provenance, RunReport, Section};

/// Sizes the global rayon pool from `ONEHOMOG_THREADS` (`0` or unset means
/// one worker per core). Later calls are no-ops.
pub fn init_threads() {
    let n = std::env::var("ONEHOMOG_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .unwrap_or(0);
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
}
