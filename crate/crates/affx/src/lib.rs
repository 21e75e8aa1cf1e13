//! Std companion to `affx-core`: corpus ingest, configuration, run directories, reports and
//! the `affx` command line.

pub mod cli;
pub mod config;
pub mod data;
pub mod files;
pub mod idx;
pub mod pipeline;
pub mod report;
pub mod svg;
