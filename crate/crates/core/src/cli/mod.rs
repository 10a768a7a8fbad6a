//! Batch front end shared by the `haar-greedy` binary and the test suites:
//! input parsing, single-function approximation reports and the randomized
//! property suites.

mod input;
mod json;
mod report;
mod suite;

pub use input::{parse_csv, parse_json, random_function, read_input, Input};
pub use json::{number, render};
pub use report::{run_approx, ApproxOptions, ApproxReport};
pub use suite::{run_suite, trial_rng, GroupStats, Record, SuiteOptions, SuiteSummary, SUITES};

use crate::error::Error;

/// Version of the JSON documents written to standard output.
pub const SCHEMA: u32 = 1;

/// Process exit statuses.
pub mod exit {
    pub const OK: i32 = 0;
    /// A report or suite found an inequality violation.
    pub const VIOLATION: i32 = 1;
    pub const BAD_INPUT: i32 = 2;
    pub const ORACLE_CAP: i32 = 3;
    pub const SOLVER: i32 = 4;
}

/// Exit status for a library error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::OracleCap(_) => exit::ORACLE_CAP,
        Error::NoConvergence { .. } => exit::SOLVER,
        _ => exit::BAD_INPUT,
    }
}
