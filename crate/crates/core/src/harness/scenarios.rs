//! Built-in scenario presets.

use crate::error::{Error, Result};

use super::config::ExperimentConfig;

const PRESETS: [(&str, &str); 4] = [
    ("A", include_str!("../../scenarios/a.toml")),
    ("B", include_str!("../../scenarios/b.toml")),
    ("C", include_str!("../../scenarios/c.toml")),
    ("D", include_str!("../../scenarios/d.toml")),
];

pub fn scenario_ids() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(id, _)| *id)
}

/// Raw TOML of a preset.
pub fn preset_text(id: &str) -> Result<&'static str> {
    PRESETS
        .iter()
        .find(|(name, _)| name.eq_ignore_ascii_case(id))
        .map(|(_, text)| *text)
        .ok_or_else(|| Error::Config(format!("unknown scenario {id:?}; expected one of A, B, C, D")))
}

pub fn preset(id: &str) -> Result<ExperimentConfig> {
    ExperimentConfig::from_toml_str(preset_text(id)?)
}
