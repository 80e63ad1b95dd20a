//! Scenario files, the CSV event log, feature extraction and the `finkmc`
//! command line, on top of the `finkmc-core` simulator.

pub mod cli;
pub mod config;
pub mod features;
pub mod logio;
pub mod replay;

pub use config::{baseline_scenario, parse_config, validate_config, SimulationConfig, Violation, ViolationCode};
pub use features::{extract_features, label_table, time_diff_stats, write_features, FeatureRow, TimeDiffStats};
pub use logio::{format_timestamp, read_log, token_for, write_events, LogRecord, LogWriter, Token};
pub use replay::{diff_against, replay, ReplayedAgent};
