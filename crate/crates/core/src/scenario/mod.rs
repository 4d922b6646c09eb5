//! Scenario configuration, command dispatch and CSV output.

mod commands;
mod config;
mod csv;

pub use commands::{run, sweep, Command};
pub use config::{
    format_f64, DataBudgetSettings, MonteCarloAnalysis, ScenarioConfig, SweepGrid, YieldSettings,
    KEYS,
};
pub use csv::{format_number, Cell, Table};

/// Written into every output header.
pub const ARTIFACT_VERSION: &str = concat!("qkdsim ", env!("CARGO_PKG_VERSION"));
