//! Report files: per-cycle telemetry CSV, the per-seed metrics table, the
//! summary table of mean percentage deltas, two-panel SVG charts and a
//! metadata sidecar.
//!
//! Everything except `metadata.json` is a pure function of the scenario
//! configurations and seeds; the wall-clock timestamp lives only in the
//! sidecar.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use pacing_core::metrics::MetricDeltas;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::harness::ExperimentResult;
use crate::plot::{render_svg, Trace};

pub const TELEMETRY_HEADER: [&str; 9] = [
    "cycle",
    "lambda",
    "cycle_spend",
    "cum_spend",
    "target_cum_spend",
    "auctions",
    "wins",
    "controller",
    "seed",
];

/// One row of `telemetry.csv`; field order is the column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelemetryRow {
    pub cycle: usize,
    pub lambda: f64,
    pub cycle_spend: f64,
    pub cum_spend: f64,
    pub target_cum_spend: f64,
    pub auctions: u64,
    pub wins: u64,
    pub controller: String,
    pub seed: u64,
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("cannot write {path}: {source}{}", written_note(written))]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
        /// Files completed before the failure.
        written: Vec<PathBuf>,
    },
    #[error("cannot read telemetry {path}: {message}")]
    Telemetry { path: PathBuf, message: String },
}

fn written_note(written: &[PathBuf]) -> String {
    if written.is_empty() {
        String::new()
    } else {
        let list: Vec<_> = written
            .iter()
            .map(|p| format!("  {}", p.display()))
            .collect();
        format!("\npartial output:\n{}", list.join("\n"))
    }
}

#[derive(Debug, Clone, Default)]
pub struct ScenarioArtifacts {
    pub name: String,
    pub telemetry: PathBuf,
    pub config: PathBuf,
    pub plots: Vec<PathBuf>,
}

#[derive(Debug, Clone, Default)]
pub struct RunReport {
    pub out_dir: PathBuf,
    pub summary: PathBuf,
    pub metrics: PathBuf,
    pub metadata: PathBuf,
    pub scenarios: Vec<ScenarioArtifacts>,
    pub warnings: Vec<String>,
}

impl RunReport {
    pub fn files(&self) -> Vec<&Path> {
        let mut files = vec![
            self.summary.as_path(),
            self.metrics.as_path(),
            self.metadata.as_path(),
        ];
        for s in &self.scenarios {
            files.push(&s.telemetry);
            files.push(&s.config);
            files.extend(s.plots.iter().map(PathBuf::as_path));
        }
        files
    }
}

struct Writer {
    written: Vec<PathBuf>,
}

impl Writer {
    fn write(&mut self, path: PathBuf, bytes: impl AsRef<[u8]>) -> Result<PathBuf, ReportError> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|source| self.fail(parent.to_path_buf(), source))?;
        }
        fs::write(&path, bytes).map_err(|source| self.fail(path.clone(), source))?;
        self.written.push(path.clone());
        Ok(path)
    }

    fn fail(&self, path: PathBuf, source: std::io::Error) -> ReportError {
        ReportError::Io {
            path,
            source,
            written: self.written.clone(),
        }
    }
}

/// Telemetry rows for one experiment, seeds in order, the test controller's
/// rows before the reference's.
pub fn telemetry_rows(result: &ExperimentResult) -> Vec<TelemetryRow> {
    let (test_label, reference_label) = labels(result);
    let mut rows = Vec::new();
    for run in &result.runs {
        for (label, sim) in [(&test_label, &run.test), (&reference_label, &run.reference)] {
            rows.extend(sim.telemetry.records.iter().map(|r| TelemetryRow {
                cycle: r.cycle,
                lambda: r.lambda,
                cycle_spend: r.cycle_spend,
                cum_spend: r.cum_spend,
                target_cum_spend: r.target_cum_spend,
                auctions: r.auctions,
                wins: r.wins,
                controller: label.clone(),
                seed: run.seed,
            }));
        }
    }
    rows
}

fn labels(result: &ExperimentResult) -> (String, String) {
    let test = result.scenario.test_kind.name().to_string();
    let reference = result.scenario.reference_kind.name().to_string();
    if test == reference {
        (test, format!("{reference}_reference"))
    } else {
        (test, reference)
    }
}

pub fn telemetry_csv(rows: &[TelemetryRow]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    // Header is written by serialize() from the field names.
    for row in rows {
        w.serialize(row).expect("in-memory csv write");
    }
    if rows.is_empty() {
        w.write_record(TELEMETRY_HEADER)
            .expect("in-memory csv write");
    }
    w.into_inner().expect("in-memory csv flush")
}

pub fn read_telemetry(path: &Path) -> Result<Vec<TelemetryRow>, ReportError> {
    let err = |message: String| ReportError::Telemetry {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = csv::Reader::from_path(path).map_err(|e| err(e.to_string()))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| err(e.to_string()))?
        .iter()
        .map(String::from)
        .collect();
    if header != TELEMETRY_HEADER {
        return Err(err(format!("unexpected header {header:?}")));
    }
    reader
        .deserialize()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| err(e.to_string()))
}

/// One chart per seed, controllers in order of first appearance.
pub fn render_plots(scenario: &str, rows: &[TelemetryRow]) -> Vec<(u64, String)> {
    let mut by_seed: BTreeMap<u64, Vec<&TelemetryRow>> = BTreeMap::new();
    for row in rows {
        by_seed.entry(row.seed).or_default().push(row);
    }
    by_seed
        .into_iter()
        .map(|(seed, rows)| {
            let mut traces: Vec<Trace> = Vec::new();
            let mut ideal = Vec::new();
            for row in &rows {
                let idx = match traces.iter().position(|t| t.label == row.controller) {
                    Some(i) => i,
                    None => {
                        traces.push(Trace {
                            label: row.controller.clone(),
                            cum_spend: vec![],
                            lambda: vec![],
                        });
                        traces.len() - 1
                    }
                };
                if idx == 0 {
                    ideal.push(row.target_cum_spend);
                }
                traces[idx].cum_spend.push(row.cum_spend);
                traces[idx].lambda.push(row.lambda);
            }
            (
                seed,
                render_svg(&format!("{scenario}, seed {seed}"), &ideal, &traces),
            )
        })
        .collect()
}

fn fmt_delta(d: Option<f64>) -> String {
    d.map_or_else(|| "NA".to_string(), |v| format!("{v:+.2}%"))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |v| v.to_string())
}

/// Table of mean percentage deltas: one row per metric, one column per
/// scenario. With no seeds anywhere only the header is written.
pub fn summary_csv(results: &[ExperimentResult]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["metric".to_string()];
    header.extend(results.iter().map(|r| r.scenario.name().to_string()));
    w.write_record(&header).expect("in-memory csv write");
    if results.iter().any(|r| !r.runs.is_empty()) {
        let deltas: Vec<MetricDeltas> = results.iter().map(ExperimentResult::mean_deltas).collect();
        type Pick = fn(&MetricDeltas) -> Option<f64>;
        let rows: [(&str, Pick); 3] = [
            ("PE", |d| d.pacing_error),
            ("CV_lambda", |d| d.lambda_volatility),
            ("CPM", |d| d.cpm),
        ];
        for (name, get) in rows {
            let mut record = vec![name.to_string()];
            record.extend(deltas.iter().map(|d| fmt_delta(get(d))));
            w.write_record(&record).expect("in-memory csv write");
        }
    }
    w.into_inner().expect("in-memory csv flush")
}

/// Raw per-seed metrics for both controllers of every scenario.
pub fn metrics_csv(results: &[ExperimentResult]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "scenario",
        "seed",
        "role",
        "controller",
        "pacing_error",
        "lambda_volatility",
        "cpm",
        "n_cycles",
        "divergence_cycle",
    ])
    .expect("in-memory csv write");
    for result in results {
        let (test_label, reference_label) = labels(result);
        for run in &result.runs {
            for (role, label, m) in [
                ("test", &test_label, &run.test_metrics),
                ("reference", &reference_label, &run.reference_metrics),
            ] {
                w.write_record([
                    result.scenario.name().to_string(),
                    run.seed.to_string(),
                    role.to_string(),
                    label.clone(),
                    m.pacing_error.to_string(),
                    m.lambda_volatility.to_string(),
                    fmt_opt(m.cpm),
                    m.n_cycles.to_string(),
                    run.divergence_cycle
                        .map_or_else(String::new, |c| c.to_string()),
                ])
                .expect("in-memory csv write");
            }
        }
    }
    w.into_inner().expect("in-memory csv flush")
}

#[derive(Serialize)]
struct Metadata<'a> {
    tool: &'static str,
    version: &'static str,
    generated_unix_seconds: u64,
    scenarios: Vec<ScenarioMeta<'a>>,
}

#[derive(Serialize)]
struct ScenarioMeta<'a> {
    name: &'a str,
    config_sha256: &'a str,
    seeds: &'a [u64],
    horizon: usize,
    lambda0: f64,
}

/// Writes every artifact for `results` under `out_dir`.
pub fn emit_report(results: &[ExperimentResult], out_dir: &Path) -> Result<RunReport, ReportError> {
    let mut w = Writer {
        written: Vec::new(),
    };
    let mut report = RunReport {
        out_dir: out_dir.to_path_buf(),
        ..Default::default()
    };

    for result in results {
        let name = result.scenario.name();
        if result.runs.is_empty() {
            report.warnings.push(format!(
                "scenario {name} has no seeds; nothing was simulated"
            ));
        }
        let dir = out_dir.join(name);
        let rows = telemetry_rows(result);
        let mut artifacts = ScenarioArtifacts {
            name: name.to_string(),
            ..Default::default()
        };
        artifacts.telemetry = w.write(dir.join("telemetry.csv"), telemetry_csv(&rows))?;
        artifacts.config = w.write(dir.join("config.toml"), result.scenario.config.to_toml())?;
        for (seed, svg) in render_plots(name, &rows) {
            artifacts
                .plots
                .push(w.write(dir.join(format!("seed_{seed}.svg")), svg)?);
        }
        report.scenarios.push(artifacts);
    }
    report.summary = w.write(out_dir.join("summary.csv"), summary_csv(results))?;
    report.metrics = w.write(out_dir.join("metrics.csv"), metrics_csv(results))?;

    let now = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    let meta = Metadata {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        generated_unix_seconds: now,
        scenarios: results
            .iter()
            .map(|r| ScenarioMeta {
                name: r.scenario.name(),
                config_sha256: &r.scenario.config_hash,
                seeds: r.scenario.seeds(),
                horizon: r.scenario.config.horizon,
                lambda0: r.scenario.lambda0,
            })
            .collect(),
    };
    let json = serde_json::to_string_pretty(&meta).expect("metadata serializes");
    report.metadata = w.write(out_dir.join("metadata.json"), json + "\n")?;
    Ok(report)
}

/// Re-renders the charts of every `*/telemetry.csv` under `out_dir`.
pub fn rerender(out_dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    let mut w = Writer {
        written: Vec::new(),
    };
    let entries = fs::read_dir(out_dir).map_err(|source| w.fail(out_dir.to_path_buf(), source))?;
    let mut dirs: Vec<PathBuf> = entries
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.join("telemetry.csv").is_file())
        .collect();
    dirs.sort();
    for dir in dirs {
        let rows = read_telemetry(&dir.join("telemetry.csv"))?;
        let name = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        for (seed, svg) in render_plots(&name, &rows) {
            w.write(dir.join(format!("seed_{seed}.svg")), svg)?;
        }
    }
    Ok(w.written)
}
