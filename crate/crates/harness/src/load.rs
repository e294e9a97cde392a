use std::path::Path;

use cdl_perturbation::Scenario;
use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::{HarnessError, ScenarioFile};

/// A validated scenario together with its effective configuration.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    /// Configuration with every default filled in.
    pub file: ScenarioFile,
    pub scenario: Scenario,
    /// `file` rendered back to TOML.
    pub echo: String,
    /// SHA-256 of `echo`.
    pub input_hash: String,
}

impl LoadedScenario {
    pub fn from_file(mut file: ScenarioFile) -> Result<Self, HarnessError> {
        file.fill_defaults();
        let scenario = file.to_scenario()?;
        let echo = toml::to_string(&file).map_err(|e| HarnessError::Schema { path: "<echo>".into(), message: e.to_string() })?;
        let input_hash = hex::encode(Sha256::digest(echo.as_bytes()));
        Ok(Self { file, scenario, echo, input_hash })
    }
}

pub fn load_scenario(path: &Path, overrides: &[String]) -> Result<LoadedScenario, HarnessError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::Read { path: path.display().to_string(), message: e.to_string() })?;
    parse_scenario(&text, overrides)
}

/// Parses a scenario document, applies `key=value` overrides, and validates.
pub fn parse_scenario(text: &str, overrides: &[String]) -> Result<LoadedScenario, HarnessError> {
    let mut doc: Table =
        text.parse().map_err(|e: toml::de::Error| HarnessError::Schema { path: "<document>".into(), message: e.to_string() })?;
    for o in overrides {
        apply_override(&mut doc, o)?;
    }
    let file: ScenarioFile = serde_path_to_error::deserialize(Value::Table(doc)).map_err(|e| {
        let inner = e.inner().to_string().lines().next().unwrap_or_default().to_string();
        let mut path = e.path().to_string();
        // name the missing entry itself rather than its parent section
        if let Some(name) = inner.strip_prefix("missing field `").and_then(|r| r.split('`').next()) {
            path = if path == "." { name.to_string() } else { format!("{path}.{name}") };
        }
        HarnessError::Schema { path, message: inner }
    })?;
    LoadedScenario::from_file(file)
}

/// Sets a dotted key (`field.N`, `detectors.0.coupling`) to a TOML value.
/// Values that do not parse as TOML are taken as strings.
pub fn apply_override(doc: &mut Table, spec: &str) -> Result<(), HarnessError> {
    let (key, raw) = spec.split_once('=').ok_or_else(|| HarnessError::Override(spec.into()))?;
    let (key, raw) = (key.trim(), raw.trim());
    if key.is_empty() {
        return Err(HarnessError::Override(spec.into()));
    }
    let value = format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.into()));
    let parts: Vec<&str> = key.split('.').collect();
    let mut root = Value::Table(std::mem::take(doc));
    let result = set_path(&mut root, &parts, value);
    if let Value::Table(t) = root {
        *doc = t;
    }
    result.map_err(|m| HarnessError::Schema { path: key.into(), message: m.into() })
}

fn set_path(node: &mut Value, parts: &[&str], value: Value) -> Result<(), &'static str> {
    let (first, rest) = parts.split_first().ok_or("empty key")?;
    let child = match node {
        Value::Table(t) => {
            if rest.is_empty() {
                t.insert(first.to_string(), value);
                return Ok(());
            }
            t.entry(first.to_string()).or_insert_with(|| Value::Table(Table::new()))
        }
        Value::Array(a) => {
            let i: usize = first.parse().map_err(|_| "array index expected")?;
            let slot = a.get_mut(i).ok_or("array index out of range")?;
            if rest.is_empty() {
                *slot = value;
                return Ok(());
            }
            slot
        }
        _ => return Err("cannot descend into a plain value"),
    };
    set_path(child, rest, value)
}
