//! Benchmark orchestration and the subcommand implementations behind the
//! `qst` binary.

pub mod bench;
pub mod commands;
pub mod io;
