//! Experiment driver: configuration, training protocol, closed-loop
//! scenarios, sweeps and file outputs.

pub mod config;
pub mod log;
pub mod output;
pub mod scenario;
pub mod sweep;
pub mod training;

pub use config::{ModelKind, RunConfig, Scenario};
pub use log::{nmse, summarize, LegRow, NmseEntry, RunLog, Summary, TickRow};
pub use scenario::{evaluate_prediction, flat_nmse, run_scenario, BjEpisode, ScenarioOutcome};
pub use training::{record_flat_log, run_training, FlatLog, TrainingOutcome};
