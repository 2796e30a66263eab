//! Paired seeded runs of a test controller against a reference controller.
//!
//! Within a seed both controllers bid into the same per-cycle opportunity
//! streams. Their spend paths are identical until the first cycle at which
//! their multipliers differ; from there on, metric deltas mix controller
//! behaviour with the different budget each has left.

use pacing_core::metrics::{delta_vs_baseline, MetricDeltas, MetricsReport};
use pacing_core::plant::{run_closed_loop, AuctionPlant, ScenarioResult};
use pacing_core::ControllerKind;
use rayon::prelude::*;

use crate::config::Scenario;

#[derive(Debug, Clone)]
pub struct SeedRun {
    pub seed: u64,
    pub test: ScenarioResult,
    pub reference: ScenarioResult,
    pub test_metrics: MetricsReport,
    pub reference_metrics: MetricsReport,
    pub deltas: MetricDeltas,
    /// First cycle at which the two multipliers differ.
    pub divergence_cycle: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub scenario: Scenario,
    pub runs: Vec<SeedRun>,
}

impl ExperimentResult {
    /// Mean over seeds of each per-seed percentage delta, skipping seeds
    /// where the delta is undefined.
    pub fn mean_deltas(&self) -> MetricDeltas {
        fn mean(xs: impl Iterator<Item = Option<f64>>) -> Option<f64> {
            let (sum, n) = xs.flatten().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
            (n > 0).then(|| sum / n as f64)
        }
        MetricDeltas {
            pacing_error: mean(self.runs.iter().map(|r| r.deltas.pacing_error)),
            lambda_volatility: mean(self.runs.iter().map(|r| r.deltas.lambda_volatility)),
            cpm: mean(self.runs.iter().map(|r| r.deltas.cpm)),
        }
    }
}

/// Runs one controller kind of `scenario` under `seed`.
pub fn run_controller(scenario: &Scenario, kind: ControllerKind, seed: u64) -> ScenarioResult {
    let plant = AuctionPlant {
        adline: scenario.adline.clone(),
        traffic: scenario.traffic,
        seed,
    };
    let mut controller = scenario
        .constants
        .build(kind, scenario.lambda0)
        .expect("scenario constants were validated");
    let telemetry = run_closed_loop(&plant, &mut controller, &scenario.plan);
    ScenarioResult {
        telemetry,
        seed,
        controller_kind: kind,
    }
}

/// Metrics over the scenario's measurement window.
pub fn measure(scenario: &Scenario, result: &ScenarioResult) -> MetricsReport {
    let records = &result.telemetry.records[scenario.measure.clone()];
    MetricsReport::from_records(records, scenario.config.slot_width)
}

pub fn run_seed(scenario: &Scenario, seed: u64) -> SeedRun {
    let test = run_controller(scenario, scenario.test_kind, seed);
    let reference = run_controller(scenario, scenario.reference_kind, seed);
    let test_metrics = measure(scenario, &test);
    let reference_metrics = measure(scenario, &reference);
    let divergence_cycle = test
        .telemetry
        .records
        .iter()
        .zip(&reference.telemetry.records)
        .position(|(a, b)| a.lambda != b.lambda);
    SeedRun {
        seed,
        deltas: delta_vs_baseline(&test_metrics, &reference_metrics),
        test,
        reference,
        test_metrics,
        reference_metrics,
        divergence_cycle,
    }
}

/// Runs every seed of `scenario`; seeds fan out over the rayon pool and
/// results come back in seed-list order.
pub fn run_experiment(scenario: &Scenario) -> ExperimentResult {
    let runs = scenario
        .seeds()
        .par_iter()
        .map(|&seed| run_seed(scenario, seed))
        .collect();
    ExperimentResult {
        scenario: scenario.clone(),
        runs,
    }
}
