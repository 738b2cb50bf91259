//! Flat TOML configuration with `key=value` command-line overrides.

use std::fs;
use std::path::Path;

use anyhow::{anyhow, Context, Result};
use masec_core::harness::ScenarioConfig;
use toml::{Table, Value};

/// Parse an override value as a TOML literal, falling back to a bare
/// string so `array_kind=ula` works without quoting.
fn parse_value(raw: &str) -> Value {
    let doc = format!("v = {raw}");
    match doc.parse::<Table>() {
        Ok(mut t) => t.remove("v").expect("key just written"),
        Err(_) => Value::String(raw.to_string()),
    }
}

/// Apply `key=value` pairs on top of `table`. Later pairs win.
pub fn apply_overrides(table: &mut Table, overrides: &[String]) -> Result<()> {
    for item in overrides {
        let (key, raw) = item
            .split_once('=')
            .ok_or_else(|| anyhow!("override {item:?} is not of the form key=value"))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(anyhow!("override {item:?} has an empty key"));
        }
        table.insert(key.to_string(), parse_value(raw.trim()));
    }
    Ok(())
}

/// Build a configuration from an optional file plus overrides. Unknown keys
/// and ill-typed values are errors.
pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<ScenarioConfig> {
    let mut table = match path {
        Some(p) => {
            let text = fs::read_to_string(p)
                .with_context(|| format!("cannot read config file {}", p.display()))?;
            text.parse::<Table>()
                .with_context(|| format!("config file {} is not valid TOML", p.display()))?
        }
        None => Table::new(),
    };
    apply_overrides(&mut table, overrides)?;
    let cfg: ScenarioConfig = Value::Table(table)
        .try_into()
        .context("invalid configuration")?;
    Ok(cfg)
}

/// The effective configuration as TOML; loading it back reproduces `cfg`.
pub fn to_toml(cfg: &ScenarioConfig) -> Result<String> {
    toml::to_string(cfg).context("serializing configuration")
}
