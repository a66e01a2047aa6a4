//! File formats, configuration, parallel drivers and subcommands for `ggmsel`.

pub mod commands;
pub mod config;
pub mod error;
pub mod ingest;
pub mod parallel;
pub mod report;
