//! Scenario configuration, seeded paired runs and report emission for the
//! pacing controllers in `pacing-core`.

pub mod config;
pub mod harness;
pub mod plot;
pub mod presets;
pub mod report;

pub use config::{load_config, parse_config, LoadError, Scenario, ScenarioConfig};
pub use harness::{run_experiment, ExperimentResult, SeedRun};
pub use report::{emit_report, RunReport};
