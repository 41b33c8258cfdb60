//! Named presets and TOML scenario files.

use std::path::Path;

use thiserror::Error;

use crate::simulator::{ConfigError, ScenarioConfig};

pub const PRESET_NAMES: [&str; 5] = ["A", "B", "C", "D", "E"];

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed scenario: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("cannot serialise scenario: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error("invalid scenario: {0}")]
    Config(#[from] ConfigError),
}

/// Preset by name (case-insensitive).
pub fn preset(name: &str) -> Option<ScenarioConfig> {
    let (lambda, capacities): (f64, &[f64]) = match name.to_ascii_uppercase().as_str() {
        "A" => (0.85, &[0.8, 0.6, 0.4, 0.2]),
        "B" => (0.85, &[0.9, 0.8, 0.7, 0.5, 0.3]),
        "C" => (0.6, &[0.8, 0.7, 0.5, 0.3, 0.2]),
        "D" => (0.6, &[0.9, 0.8, 0.7, 0.5, 0.3]),
        "E" => (0.8, &[0.9, 0.85, 0.8, 0.75, 0.7, 0.65, 0.6, 0.5]),
        _ => return None,
    };
    Some(ScenarioConfig::new(
        name.to_ascii_uppercase(),
        lambda,
        capacities.to_vec(),
    ))
}

pub fn presets() -> Vec<ScenarioConfig> {
    PRESET_NAMES.iter().filter_map(|n| preset(n)).collect()
}

/// Parses and validates a scenario from TOML text.
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig, ScenarioError> {
    let config: ScenarioConfig = toml::from_str(text)?;
    config.validate()?;
    Ok(config)
}

pub fn emit_scenario(config: &ScenarioConfig) -> Result<String, ScenarioError> {
    Ok(toml::to_string(config)?)
}

/// Resolves `source` as a preset name first, then as a path to a TOML file.
pub fn load_scenario(source: &str) -> Result<ScenarioConfig, ScenarioError> {
    if let Some(config) = preset(source) {
        return Ok(config);
    }
    load_scenario_file(Path::new(source))
}

pub fn load_scenario_file(path: &Path) -> Result<ScenarioConfig, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_scenario(&text)
}
