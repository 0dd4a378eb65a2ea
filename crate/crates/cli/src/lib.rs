//! Experiment drivers: config parsing, presets, manifests, result files.

pub mod config;
pub mod manifest;
pub mod output;
pub mod presets;
pub mod runner;
