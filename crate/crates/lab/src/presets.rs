//! Scenario files bundled with the binary.

use crate::config::{parse_config, LoadError, ScenarioConfig};

pub const NAMES: [&str; 5] = [
    "bhc_standard_vs_baseline",
    "aof_vs_baseline",
    "alu_vs_baseline",
    "rsdm_vs_baseline",
    "ssdm_vs_baseline",
];

pub fn text(name: &str) -> Option<&'static str> {
    Some(match name {
        "bhc_standard_vs_baseline" => include_str!("../presets/bhc_standard_vs_baseline.toml"),
        "aof_vs_baseline" => include_str!("../presets/aof_vs_baseline.toml"),
        "alu_vs_baseline" => include_str!("../presets/alu_vs_baseline.toml"),
        "rsdm_vs_baseline" => include_str!("../presets/rsdm_vs_baseline.toml"),
        "ssdm_vs_baseline" => include_str!("../presets/ssdm_vs_baseline.toml"),
        _ => return None,
    })
}

pub fn load(name: &str) -> Result<ScenarioConfig, LoadError> {
    let text = text(name).ok_or_else(|| LoadError::Parse {
        origin: format!("preset {name:?}"),
        message: format!("no such preset; known: {}", NAMES.join(", ")),
    })?;
    parse_config(text, &format!("preset {name:?}"))
}
