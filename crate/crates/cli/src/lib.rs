//! File formats, configuration and subcommands for the `vbamap` tool.
//!
//! All statistics and rendering come from `vbamap-core`; this crate reads
//! and writes the delimited, GeoJSON and JSON files around it.

pub mod bundle;
pub mod commands;
pub mod config;
pub mod export;
pub mod ingest;

pub use config::{ConfigFile, MapMode, RunConfig};
