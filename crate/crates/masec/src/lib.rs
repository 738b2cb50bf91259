//! Configuration files, CSV output and the `masec` command line on top of
//! `masec-core`.

pub mod cli;
pub mod config;
pub mod io;
