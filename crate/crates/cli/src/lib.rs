//! Config-driven experiment runner behind the `entro` binary.

pub mod config;
pub mod output;
pub mod run;
pub mod verify;

use entro_core::Error;

/// Process exit status for a successful run.
pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;
pub const EXIT_VERDICT: i32 = 3;

/// Configuration and input-shape errors exit with 1, everything else with 2.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Shape(_) | Error::Mesh(_) => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    }
}
