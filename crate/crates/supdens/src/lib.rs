//! Front-end support for the `supdens` binary: grids, tabular output, the parallel
//! Monte Carlo driver and the verification checks.

pub mod config;
pub mod grid;
pub mod mc;
pub mod output;
pub mod verify;

use supdens_core::Error;

/// Process exit status for a library error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Hypothesis(_) => 4,
        _ => 2,
    }
}

/// Single-line diagnostic, `error[CODE]: message`.
pub fn diagnostic(err: &Error) -> String {
    format!("error[{}]: {}", err.code(), err)
}
