//! Scenario runner for the coupled-resonator EIT simulator.
//!
//! Configs are TOML documents (see [`config`]); each scenario writes a fixed
//! set of CSV files and, on request, an SVG plot.

pub mod config;
pub mod error;
pub mod plot;
pub mod scenario;

pub use config::{parse_config, parse_config_with, ExperimentConfig, Scenario, Units};
pub use error::RunError;
pub use plot::{emit_svg, Axes, Series};
pub use scenario::{run_scenario, write_artifacts, Artifact};
