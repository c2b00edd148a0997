//! File formats and subcommands behind the `tmfkit` binary.

pub mod commands;
pub mod io;
