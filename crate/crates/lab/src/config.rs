//! Scenario configuration files.
//!
//! A scenario is one TOML document naming the ad line, its spend plan, the
//! traffic it bids into, the controller under test, the reference controller
//! it is compared against, and every controller constant. The full schema
//! with every field is documented in `docs/config.md`.

use std::fmt;
use std::path::{Path, PathBuf};

use pacing_core::controllers::{
    BandTable, BaselineParams, ChainMode, ControllerConstants, Tolerance,
};
use pacing_core::plant::{PlanShape, SpendPlan, TrafficModel};
use pacing_core::{AdLine, ConfigError, ControllerKind, PricingRule};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub horizon: usize,
    pub seeds: Vec<u64>,
    /// Cycles per pacing-error slot.
    #[serde(default = "one")]
    pub slot_width: usize,
    pub start: StartConfig,
    #[serde(default)]
    pub measure: MeasureConfig,
    pub adline: AdLineConfig,
    pub plan: PlanConfig,
    pub traffic: TrafficConfig,
    pub controllers: ControllersConfig,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartConfig {
    pub lambda0: f64,
    /// Start both controllers at the multiplier whose expected spend meets
    /// the first cycle's desired rate, instead of `lambda0`.
    #[serde(default)]
    pub warm_start: bool,
}

/// Fraction of the horizon the metrics are computed over.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureConfig {
    pub from: f64,
    pub to: f64,
}

impl Default for MeasureConfig {
    fn default() -> Self {
        Self { from: 0.0, to: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdLineConfig {
    pub id: String,
    pub max_bid: f64,
    pub budget_total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum PlanConfig {
    Even,
    Weighted {
        weights: Vec<f64>,
    },
    /// Constant weight that jumps by `ratio` at `at` (fraction of horizon).
    Step {
        at: f64,
        ratio: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TrafficConfig {
    Explicit(TrafficParams),
    Preset { preset: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrafficParams {
    pub arrivals_per_cycle: f64,
    pub competitor_mu: f64,
    pub competitor_sigma: f64,
    pub p_lo: f64,
    pub p_hi: f64,
    pub pricing: Pricing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pricing {
    FirstPrice,
    SecondPrice,
}

impl From<Pricing> for PricingRule {
    fn from(p: Pricing) -> Self {
        match p {
            Pricing::FirstPrice => PricingRule::FirstPrice,
            Pricing::SecondPrice => PricingRule::SecondPrice,
        }
    }
}

impl From<TrafficParams> for TrafficModel {
    fn from(t: TrafficParams) -> Self {
        TrafficModel {
            arrivals_per_cycle: t.arrivals_per_cycle,
            competitor_mu: t.competitor_mu,
            competitor_sigma: t.competitor_sigma,
            p_lo: t.p_lo,
            p_hi: t.p_hi,
            pricing: t.pricing.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllersConfig {
    pub test: String,
    pub reference: String,
    pub lambda_min: f64,
    pub tolerance_relative: f64,
    pub tolerance_absolute: f64,
    pub baseline: BaselineConfig,
    pub standard_bands: BandsConfig,
    pub slowed_bands: BandsConfig,
    pub aof: AofConfig,
    pub alu: AluConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineConfig {
    pub alpha0: f64,
    pub eta_up: f64,
    pub eta_down: f64,
    pub tau: f64,
    pub window_n: usize,
    pub alpha_min: f64,
    pub alpha_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandsConfig {
    pub thresholds: Vec<f64>,
    pub scales: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AofConfig {
    pub window_m: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AluConfig {
    pub window_l: usize,
    pub chain: Chain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Chain {
    Candidate,
    Applied,
}

impl From<Chain> for ChainMode {
    fn from(c: Chain) -> Self {
        match c {
            Chain::Candidate => ChainMode::Candidate,
            Chain::Applied => ChainMode::Applied,
        }
    }
}

/// One failed check, with the dotted path of the offending field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldError {
    pub field: String,
    pub reason: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.reason)
    }
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse {origin}: {message}")]
    Parse { origin: String, message: String },
    #[error("{origin} failed validation:\n{}", list(errors))]
    Invalid {
        origin: String,
        errors: Vec<FieldError>,
    },
}

fn list(errors: &[FieldError]) -> String {
    errors
        .iter()
        .map(|e| format!("  - {e}"))
        .collect::<Vec<_>>()
        .join("\n")
}

/// A configuration that passed every check, with the core types built.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub adline: AdLine,
    pub plan: SpendPlan,
    pub traffic: TrafficModel,
    pub constants: ControllerConstants,
    pub test_kind: ControllerKind,
    pub reference_kind: ControllerKind,
    /// Initial multiplier for both controllers.
    pub lambda0: f64,
    /// Half-open cycle range the metrics cover.
    pub measure: std::ops::Range<usize>,
    /// SHA-256 of the canonical serialized configuration.
    pub config_hash: String,
}

impl Scenario {
    pub fn name(&self) -> &str {
        &self.config.name
    }

    pub fn seeds(&self) -> &[u64] {
        &self.config.seeds
    }

    /// Cycle at which a `step` plan changes rate.
    pub fn step_cycle(&self) -> Option<usize> {
        match self.config.plan {
            PlanConfig::Step { at, .. } => Some(step_index(at, self.config.horizon)),
            _ => None,
        }
    }
}

fn step_index(at: f64, horizon: usize) -> usize {
    ((at * horizon as f64).round() as usize).min(horizon)
}

/// Named traffic models that configs may reference with `preset = "..."`.
pub fn traffic_preset(name: &str) -> Option<TrafficParams> {
    let base = TrafficParams {
        arrivals_per_cycle: 2_000.0,
        competitor_mu: 0.0,
        competitor_sigma: 0.3,
        p_lo: 0.05,
        p_hi: 0.15,
        pricing: Pricing::SecondPrice,
    };
    match name {
        // Small budget against a large audience: the line only clears the
        // bottom tail of the competing bids, where spend is very elastic in
        // the multiplier.
        "high_gain" => Some(base),
        "high_gain_large_audience" => Some(TrafficParams {
            arrivals_per_cycle: 20_000.0,
            ..base
        }),
        _ => None,
    }
}

pub const TRAFFIC_PRESETS: [&str; 2] = ["high_gain", "high_gain_large_audience"];

impl ScenarioConfig {
    /// Applies CLI overrides before validation.
    pub fn with_overrides(mut self, seeds: Option<&[u64]>, horizon: Option<usize>) -> Self {
        if let Some(seeds) = seeds {
            self.seeds = seeds.to_vec();
        }
        if let Some(h) = horizon {
            self.horizon = h;
        }
        self
    }

    /// Runs every check and reports all failures together.
    pub fn validate(&self) -> Result<Scenario, Vec<FieldError>> {
        let mut errs: Vec<FieldError> = Vec::new();
        let core = |prefix: &str, e: ConfigError| {
            let field = if prefix.is_empty() || e.field.contains('.') {
                e.field.to_string()
            } else {
                format!("{prefix}.{}", e.field)
            };
            FieldError {
                field,
                reason: e.reason.to_string(),
            }
        };
        let mut push = |field: &str, reason: &str| {
            errs.push(FieldError {
                field: field.into(),
                reason: reason.into(),
            });
        };

        if self.name.trim().is_empty() {
            push("name", "must not be empty");
        }
        if self.horizon == 0 {
            push("horizon", "must be > 0");
        }
        if self.slot_width == 0 {
            push("slot_width", "must be >= 1");
        }
        let m = self.measure;
        if !(0.0 <= m.from && m.from < m.to && m.to <= 1.0) {
            push("measure", "need 0 <= from < to <= 1");
        }
        let mut seen = std::collections::BTreeSet::new();
        if self.seeds.iter().any(|s| !seen.insert(*s)) {
            push("seeds", "must not repeat");
        }

        let test_kind = ControllerKind::from_name(&self.controllers.test);
        if test_kind.is_none() {
            push("controllers.test", &unknown_kind(&self.controllers.test));
        }
        let reference_kind = ControllerKind::from_name(&self.controllers.reference);
        if reference_kind.is_none() {
            push(
                "controllers.reference",
                &unknown_kind(&self.controllers.reference),
            );
        }

        let traffic: Option<TrafficModel> = match &self.traffic {
            TrafficConfig::Explicit(t) => Some((*t).into()),
            TrafficConfig::Preset { preset } => match traffic_preset(preset) {
                Some(t) => Some(t.into()),
                None => {
                    push(
                        "traffic.preset",
                        &format!(
                            "unknown traffic preset {preset:?}; known: {}",
                            TRAFFIC_PRESETS.join(", ")
                        ),
                    );
                    None
                }
            },
        };

        let c = &self.controllers;
        let adline = AdLine {
            id: self.adline.id.clone(),
            max_bid: self.adline.max_bid,
            budget_total: self.adline.budget_total,
        };
        let tolerance = Tolerance {
            relative: c.tolerance_relative,
            absolute: c.tolerance_absolute,
        };
        let baseline = BaselineParams {
            eta_up: c.baseline.eta_up,
            eta_down: c.baseline.eta_down,
            tau: c.baseline.tau,
            tolerance,
            alpha_min: c.baseline.alpha_min,
            alpha_max: c.baseline.alpha_max,
            window_n: c.baseline.window_n,
        };

        let mut core_errs: Vec<FieldError> = Vec::new();
        core_errs.extend(adline.validate().into_iter().map(|e| core("", e)));
        if let Some(t) = &traffic {
            core_errs.extend(t.validate().into_iter().map(|e| core("", e)));
        }
        // Tolerance problems are reported once, under controllers.
        core_errs.extend(baseline.validate().into_iter().map(|e| {
            let mut fe = core("", e);
            fe.field = format!("controllers.{}", fe.field);
            fe
        }));
        if !(c.baseline.alpha0 >= c.baseline.alpha_min && c.baseline.alpha0 <= c.baseline.alpha_max)
        {
            core_errs.push(FieldError {
                field: "controllers.baseline.alpha0".into(),
                reason: "must lie in [alpha_min, alpha_max]".into(),
            });
        }
        if !(c.lambda_min > 0.0 && c.lambda_min < 1.0) {
            core_errs.push(FieldError {
                field: "controllers.lambda_min".into(),
                reason: "must lie in (0, 1)".into(),
            });
        }
        if !self.start.warm_start
            && !(self.start.lambda0 >= c.lambda_min && self.start.lambda0 <= 1.0)
        {
            core_errs.push(FieldError {
                field: "start.lambda0".into(),
                reason: "must lie in [lambda_min, 1]".into(),
            });
        }
        let bands = |name: &str, b: &BandsConfig, errs: &mut Vec<FieldError>| match BandTable::new(
            b.thresholds.clone(),
            b.scales.clone(),
        ) {
            Ok(t) => Some(t),
            Err(list) => {
                errs.extend(list.into_iter().map(|e| FieldError {
                    field: format!("controllers.{name}.{}", e.field),
                    reason: e.reason.to_string(),
                }));
                None
            }
        };
        let standard = bands("standard_bands", &c.standard_bands, &mut core_errs);
        let slowed = bands("slowed_bands", &c.slowed_bands, &mut core_errs);
        if c.aof.window_m == 0 {
            core_errs.push(FieldError {
                field: "controllers.aof.window_m".into(),
                reason: "must be >= 1".into(),
            });
        }
        if c.alu.window_l == 0 {
            core_errs.push(FieldError {
                field: "controllers.alu.window_l".into(),
                reason: "must be >= 1".into(),
            });
        }

        let shape = match &self.plan {
            PlanConfig::Even => Some(PlanShape::Even),
            PlanConfig::Weighted { weights } => Some(PlanShape::Weighted(weights.clone())),
            PlanConfig::Step { at, ratio } => {
                if !(*at > 0.0 && *at < 1.0) {
                    core_errs.push(FieldError {
                        field: "plan.at".into(),
                        reason: "must lie in (0, 1)".into(),
                    });
                }
                if !(ratio.is_finite() && *ratio > 0.0) {
                    core_errs.push(FieldError {
                        field: "plan.ratio".into(),
                        reason: "must be finite and > 0".into(),
                    });
                }
                let cut = step_index(*at, self.horizon);
                Some(PlanShape::Weighted(
                    (0..self.horizon)
                        .map(|i| if i < cut { 1.0 } else { *ratio })
                        .collect(),
                ))
            }
        };
        let plan = match shape.map(|s| SpendPlan::new(self.adline.budget_total, self.horizon, s)) {
            Some(Ok(plan)) => Some(plan),
            Some(Err(list)) => {
                core_errs.extend(
                    list.into_iter()
                        // Budget and horizon problems are already reported.
                        .filter(|e| e.field != "plan.total_budget" && e.field != "plan.horizon")
                        .map(|e| core("", e)),
                );
                None
            }
            None => None,
        };

        errs.extend(core_errs);
        if !errs.is_empty() {
            return Err(errs);
        }

        let (traffic, plan) = (traffic.expect("checked"), plan.expect("checked"));
        let constants = ControllerConstants {
            lambda_min: c.lambda_min,
            tolerance,
            baseline,
            alpha0: c.baseline.alpha0,
            standard_bands: standard.expect("checked"),
            slowed_bands: slowed.expect("checked"),
            aof_window: c.aof.window_m,
            alu_window: c.alu.window_l,
            alu_chain: c.alu.chain.into(),
        };
        let lambda0 = if self.start.warm_start {
            let d0 = plan.desired_rate(0, plan.total_budget());
            traffic.equilibrium_lambda(adline.max_bid, d0, c.lambda_min)
        } else {
            self.start.lambda0
        };
        let h = self.horizon as f64;
        let measure =
            ((m.from * h).round() as usize)..((m.to * h).round() as usize).min(self.horizon);

        Ok(Scenario {
            config: self.clone(),
            adline,
            plan,
            traffic,
            constants,
            test_kind: test_kind.expect("checked"),
            reference_kind: reference_kind.expect("checked"),
            lambda0,
            measure,
            config_hash: self.hash(),
        })
    }

    /// SHA-256 over the canonical TOML form, so formatting and comments in
    /// the source file do not change it.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let canonical = toml::to_string(self).expect("config serializes");
        Sha256::digest(canonical.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

fn unknown_kind(name: &str) -> String {
    let known: Vec<_> = ControllerKind::ALL.iter().map(|k| k.name()).collect();
    format!("unknown controller {name:?}; known: {}", known.join(", "))
}

/// Parses and validates configuration text. `origin` names the source in
/// diagnostics.
pub fn parse_config(text: &str, origin: &str) -> Result<ScenarioConfig, LoadError> {
    let config: ScenarioConfig = toml::from_str(text).map_err(|e| LoadError::Parse {
        origin: origin.to_string(),
        message: e.to_string(),
    })?;
    config.validate().map_err(|errors| LoadError::Invalid {
        origin: origin.to_string(),
        errors,
    })?;
    Ok(config)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ScenarioConfig, LoadError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text, &path.display().to_string())
}

/// Parses a seed list such as `1,2,3`, `1-20` or `1-5,9`. An empty string
/// is an empty list.
pub fn parse_seed_list(text: &str) -> Result<Vec<u64>, String> {
    let mut seeds = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let num = |s: &str| {
            s.trim()
                .parse::<u64>()
                .map_err(|_| format!("bad seed {s:?} in {text:?}"))
        };
        match part.split_once('-') {
            Some((lo, hi)) => {
                let (lo, hi) = (num(lo)?, num(hi)?);
                if lo > hi {
                    return Err(format!("empty seed range {part:?}"));
                }
                seeds.extend(lo..=hi);
            }
            None => seeds.push(num(part)?),
        }
    }
    Ok(seeds)
}
