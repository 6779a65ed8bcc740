//! Command line front end of the `mmdflow` library: run manifests, flow
//! runs with on-disk outputs, self-checks and a small benchmark.

pub mod bench;
pub mod manifest;
pub mod run;
pub mod verify;

use std::fmt;

/// A failed command, carrying its process exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad input detected before any work (exit code 2).
    Usage(String),
    /// Failure while running (exit code 1).
    Runtime(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(msg) | Failure::Runtime(msg) => f.write_str(msg),
        }
    }
}

impl std::error::Error for Failure {}
