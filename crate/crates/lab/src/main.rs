use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use pacing_lab::config::{parse_seed_list, TRAFFIC_PRESETS};
use pacing_lab::report::{emit_report, rerender, ReportError};
use pacing_lab::{load_config, presets, run_experiment, LoadError, Scenario, ScenarioConfig};

const EXIT_INVALID: u8 = 1;
const EXIT_IO: u8 = 2;

#[derive(Parser)]
#[command(
    name = "pacing-lab",
    version,
    about = "Simulate budget pacing controllers against a reference"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run scenarios and write telemetry, metrics, summary and charts.
    Run {
        #[command(flatten)]
        sources: Sources,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Seed list overriding the configs, e.g. `1-20` or `1,4,9`.
        #[arg(long, value_parser = parse_seeds)]
        seeds: Option<SeedList>,
        /// Horizon override in cycles.
        #[arg(long)]
        horizon: Option<usize>,
    },
    /// Check configs without simulating.
    Validate {
        #[command(flatten)]
        sources: Sources,
    },
    /// Re-render charts from the telemetry in an output directory.
    Report { dir: PathBuf },
    /// List the bundled scenario presets and traffic models.
    Presets,
}

#[derive(Args)]
struct Sources {
    /// Scenario TOML files.
    configs: Vec<PathBuf>,
    /// Bundled scenario by name; repeatable.
    #[arg(long = "preset", value_parser = clap::builder::PossibleValuesParser::new(presets::NAMES))]
    presets: Vec<String>,
}

#[derive(Clone)]
struct SeedList(Vec<u64>);

fn parse_seeds(text: &str) -> Result<SeedList, String> {
    parse_seed_list(text).map(SeedList)
}

enum Failure {
    Invalid(String),
    Io(String),
}

impl From<LoadError> for Failure {
    fn from(e: LoadError) -> Self {
        match e {
            LoadError::Io { .. } => Failure::Io(e.to_string()),
            _ => Failure::Invalid(e.to_string()),
        }
    }
}

impl From<ReportError> for Failure {
    fn from(e: ReportError) -> Self {
        match e {
            ReportError::Io { .. } => Failure::Io(e.to_string()),
            ReportError::Telemetry { .. } => Failure::Invalid(e.to_string()),
        }
    }
}

fn load_all(sources: &Sources) -> Result<Vec<(String, ScenarioConfig)>, Failure> {
    if sources.configs.is_empty() && sources.presets.is_empty() {
        return Err(Failure::Invalid(
            "no scenarios given; pass config files or --preset NAME".into(),
        ));
    }
    let mut out = Vec::new();
    for name in &sources.presets {
        out.push((format!("preset {name}"), presets::load(name)?));
    }
    for path in &sources.configs {
        out.push((path.display().to_string(), load_config(path)?));
    }
    Ok(out)
}

fn prepare(
    sources: &Sources,
    seeds: Option<&[u64]>,
    horizon: Option<usize>,
) -> Result<Vec<Scenario>, Failure> {
    let mut scenarios: Vec<Scenario> = Vec::new();
    let mut problems = Vec::new();
    for (origin, config) in load_all(sources)? {
        match config.with_overrides(seeds, horizon).validate() {
            Ok(s) => {
                if scenarios.iter().any(|o| o.name() == s.name()) {
                    problems.push(format!("{origin}: duplicate scenario name {:?}", s.name()));
                }
                scenarios.push(s);
            }
            Err(errors) => problems.push(LoadError::Invalid { origin, errors }.to_string()),
        }
    }
    if problems.is_empty() {
        Ok(scenarios)
    } else {
        Err(Failure::Invalid(problems.join("\n")))
    }
}

fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Run {
            sources,
            out,
            seeds,
            horizon,
        } => {
            let scenarios = prepare(&sources, seeds.as_ref().map(|s| s.0.as_slice()), horizon)?;
            let mut results = Vec::new();
            for s in &scenarios {
                info!(
                    "running {} ({} seeds, {} cycles)",
                    s.name(),
                    s.seeds().len(),
                    s.config.horizon
                );
                results.push(run_experiment(s));
            }
            let report = emit_report(&results, &out)?;
            for w in &report.warnings {
                warn!("{w}");
            }
            println!(
                "{}",
                String::from_utf8_lossy(&std::fs::read(&report.summary).unwrap_or_default())
                    .trim_end()
            );
            println!(
                "wrote {} files under {}",
                report.files().len(),
                out.display()
            );
        }
        Command::Validate { sources } => {
            for s in prepare(&sources, None, None)? {
                println!("ok {} sha256={}", s.name(), s.config_hash);
            }
        }
        Command::Report { dir } => {
            let written = rerender(&dir)?;
            if written.is_empty() {
                return Err(Failure::Invalid(format!(
                    "no telemetry.csv found under {}",
                    dir.display()
                )));
            }
            println!("rendered {} charts", written.len());
        }
        Command::Presets => {
            println!("scenarios:");
            for name in presets::NAMES {
                println!("  {name}");
            }
            println!("traffic models:");
            for name in TRAFFIC_PRESETS {
                println!("  {name}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Usage errors are invalid input, not I/O failures.
            return if e.use_stderr() {
                ExitCode::from(EXIT_INVALID)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_INVALID)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_IO)
        }
    }
}
