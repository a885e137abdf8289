//! Experiment harness around the core toolkit.
//!
//! The binary exposes six subcommands: `train` runs one configuration
//! across seeds, `bandit-demo` reproduces the discrete-vs-gaussian bandit
//! comparison, and the four scan commands (`variance-scan`,
//! `capacity-scan`, `cost-scan`, `sensitivity`) delegate to the analysis
//! module. Every command writes CSV tables plus a JSON manifest into the
//! configured output directory and never touches any path outside it.
//! Identical invocations produce bitwise-identical tables (wall-clock
//! columns excepted), so a manifest names its outputs exactly.

pub mod args;
pub mod commands;
pub mod outputs;
pub mod runner;

/// Harness error carrying the process exit code: 2 for configuration and
/// I/O problems, 3 when every seed of a run failed numerically.
#[derive(Debug)]
pub struct CliError {
    pub message: String,
    pub code: u8,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> CliError {
        CliError {
            message: message.into(),
            code: 2,
        }
    }

    pub fn io(context: &str, err: std::io::Error) -> CliError {
        CliError {
            message: format!("{context}: {err}"),
            code: 2,
        }
    }

    pub fn all_seeds_failed(message: impl Into<String>) -> CliError {
        CliError {
            message: message.into(),
            code: 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}
