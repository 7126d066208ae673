//! Command-line front end for `lorascale`: scenario files, the four
//! subcommands and CSV formatting.

pub mod commands;
pub mod error;
pub mod format;
pub mod scenario;
