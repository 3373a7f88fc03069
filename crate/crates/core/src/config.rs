//! Scenario files: TOML with the sections `[limits]`, `[gains]`,
//! `[trigger]`, `[noise]`, `[fuel]` and `[arrivals]` (plus
//! `[[arrivals.vehicle]]` entries). Every key is optional and unknown keys
//! are rejected.

use std::path::Path;

use crate::error::{Error, Result};
use crate::sim::ScenarioConfig;

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

/// Parses and validates a scenario.
pub fn parse_config_str(text: &str) -> Result<ScenarioConfig> {
    let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| Error::Parse {
        line: e.span().map_or(0, |s| line_of(text, s.start)),
        message: e.message().trim().to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_str(&text)
}

/// Serializes a scenario; [`parse_config_str`] reads it back unchanged.
pub fn emit_config(cfg: &ScenarioConfig) -> String {
    toml::to_string(cfg).expect("scenario config always serializes")
}

/// Applies `path=value` where `path` is a dotted key such as
/// `gains.alpha` or `trigger.max_dwell`. The value is read as a TOML value,
/// falling back to a bare string (`scheme=self_triggered`).
pub fn apply_override(cfg: &ScenarioConfig, assignment: &str) -> Result<ScenarioConfig> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Validation(format!("override {assignment:?} is not of the form key=value")))?;
    let path = path.trim();
    let raw = raw.trim();
    let value = parse_value(raw);
    let mut root = toml::Value::try_from(cfg).expect("scenario config always serializes");
    let mut slot = &mut root;
    for key in path.split('.') {
        slot = slot
            .as_table_mut()
            .and_then(|t| t.get_mut(key))
            .ok_or_else(|| Error::Validation(format!("unknown configuration key {path:?}")))?;
    }
    // integer literals for float keys
    *slot = match (&*slot, value) {
        (toml::Value::Float(_), toml::Value::Integer(i)) => toml::Value::Float(i as f64),
        (_, v) => v,
    };
    let out: ScenarioConfig = root
        .try_into()
        .map_err(|e: toml::de::Error| Error::Validation(format!("override {assignment:?}: {}", e.message().trim())))?;
    out.validate()?;
    Ok(out)
}

fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}
