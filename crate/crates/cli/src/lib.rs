//! Configuration, presets, the scenario runner and the verification suite
//! behind the `nonfick` binary.

// `!(x > 0.0)` style guards are used on purpose so NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod presets;
pub mod run;
pub mod scenario;
pub mod verify;

pub use config::ScenarioConfig;
pub use run::{run_scenario, RunOutcome};
pub use scenario::Scenario;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] nonfick_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Process exit codes.
pub mod exit {
    pub const ACCEPTED: i32 = 0;
    pub const VERIFY_FAILED: i32 = 1;
    pub const NOT_ACCEPTED: i32 = 2;
    pub const REJECTED: i32 = 3;
    pub const NUMERICAL: i32 = 4;
}

impl CliError {
    /// 3 for configuration, precondition and certificate rejections; 4 for
    /// numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numerical() => exit::NUMERICAL,
            _ => exit::REJECTED,
        }
    }
}
