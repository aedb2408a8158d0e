//! Experiment orchestration: instances, prediction caches, matchups,
//! indicators, empirical games and the command line.

pub mod cache;
pub mod cli;
pub mod config;
pub mod empirical;
pub mod indicators;
pub mod instance;
pub mod matchup;
pub mod selftest;
pub mod stats;

pub use config::{ExperimentConfig, StrategyId};
pub use empirical::{empirical_game, EmpiricalGame};
pub use indicators::{indicators, report, Indicators, PerformanceReport};
pub use instance::{generate_instance, generate_instances, load_instances, Instance};
pub use matchup::{pair_compositions, run_matchup, CellRecord, Composition, MatchupRun};
