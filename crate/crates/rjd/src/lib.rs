//! File formats and command-line harness for `rjd-core`.

pub mod cli;
pub mod report;
