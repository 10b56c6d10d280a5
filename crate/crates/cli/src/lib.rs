//! Experiment harness for the `asnp` command-line tool.

pub mod cli;
pub mod experiments;
pub mod record;
