//! Library side of the command-line front end, exposed so the integration
//! tests can drive the subcommands and re-parse their reports.

pub mod commands;
pub mod config;
pub mod report;
