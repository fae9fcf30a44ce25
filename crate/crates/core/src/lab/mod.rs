//! Experiment runner: configs, presets and report emission.

pub mod config;
pub mod presets;
pub mod runner;

pub use config::{ExperimentConfig, Overrides, ResolvedConfig};
pub use presets::{catalog, find_preset, Outcome, Preset, Table, Verdict};
pub use runner::{run_experiment, RunManifest};
