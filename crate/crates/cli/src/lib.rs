//! Experiment driver for the `graddiv` command-line tool.

pub mod commands;
pub mod config;
pub mod manifest;
pub mod replication;
