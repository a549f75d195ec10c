//! Scenario configuration, batch runs, system reports and the self-test.

pub mod batch;
pub mod config;
pub mod presets;
pub mod report;
pub mod selftest;

pub use batch::{run_scenario, simulate_trajectory, BatchSummary, LabelCounts, TrajectorySummary};
pub use config::{HamiltonianPairJson, Scenario, ScenarioConfig, ScenarioId, TargetMode};
pub use report::{analyze_system, AnalyzeOptions, SystemReport};
pub use selftest::{selftest, SelfTestOutcome};
