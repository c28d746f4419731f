//! Configuration and execution of `fraclap` runs.

pub mod config;
pub mod run;

pub use config::{parse_pairs, ConfigError, Mode, RunConfig, KEYS};
pub use run::{run, run_dir, RunError, RunOutcome};

/// Exit status for configuration errors.
pub const EXIT_CONFIG: i32 = 2;
/// Exit status when a run did not converge or a check failed.
pub const EXIT_NOT_CONVERGED: i32 = 3;
/// Exit status for I/O failures.
pub const EXIT_IO: i32 = 4;

/// Caps the global worker pool from `FRACLAP_THREADS` if set.
pub fn configure_threads(value: Option<&str>) -> Result<(), String> {
    let Some(v) = value else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("FRACLAP_THREADS must be a positive integer, got `{v}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| format!("cannot configure the worker pool: {e}"))
}
