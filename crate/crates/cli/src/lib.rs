//! Library surface of the command-line driver, exposed so integration tests
//! can parse configs and reports with the same types the binary uses.

pub mod commands;
pub mod config;
