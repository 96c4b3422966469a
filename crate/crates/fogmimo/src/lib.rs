//! Configuration, experiment orchestration, CSV output and the acceptance
//! suite on top of `fogmimo-core`.

pub mod acceptance;
pub mod config;
pub mod output;
pub mod run;

pub use fogmimo_core as core;

/// Process exit codes of the command-line tool.
pub mod exit {
    pub const SUCCESS: u8 = 0;
    pub const IO: u8 = 1;
    pub const CONFIG: u8 = 2;
    pub const NUMERICAL: u8 = 3;
    pub const ACCEPTANCE: u8 = 4;
}
