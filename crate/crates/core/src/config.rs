//! TOML configuration with dotted overrides.
//!
//! Every section and field is optional; absent values take the documented
//! defaults and unknown keys are rejected. Errors carry the dotted key path
//! and, when it can be located, the line in the source text.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ac_system::AcSystemParams;
use crate::battery::BatteryParams;
use crate::droop::{DroopParams, VscControlParams};
use crate::engine::{Models, MpptParams, Scenario};
use crate::error::{Error, Result};
use crate::metrics::MetricsParams;
use crate::pv::PvArrayParams;
use crate::sizing::SizingConstraints;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepParams {
    /// Damping values visited by `sweep`.
    pub k_d_grid: Vec<f64>,
    /// Damping values visited by `size`.
    pub sizing_grid: Vec<f64>,
}

impl Default for SweepParams {
    fn default() -> Self {
        Self {
            k_d_grid: vec![0.0, 60.0, 90.0, 140.0],
            sizing_grid: vec![1.0, 20.0, 40.0, 60.0, 80.0, 90.0, 110.0, 140.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputParams {
    pub dir: PathBuf,
    /// Write one time-series CSV per run during `sweep`.
    pub write_timeseries: bool,
}

impl Default for OutputParams {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            write_timeseries: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub pv: PvArrayParams,
    pub mppt: MpptParams,
    pub battery: BatteryParams,
    pub droop: DroopParams,
    pub vsc: VscControlParams,
    pub ac_system: AcSystemParams,
    pub scenario: Scenario,
    pub metrics: MetricsParams,
    pub sweep: SweepParams,
    pub constraints: SizingConstraints,
    pub output: OutputParams,
}

fn check_grid(key: &str, grid: &[f64]) -> Result<()> {
    let bad = |m: &str| Err(Error::InvalidParams(format!("sweep.{key}: {m}")));
    if grid.is_empty() {
        return bad("must not be empty");
    }
    if grid.iter().any(|k| !(k.is_finite() && *k >= 0.0)) {
        return bad("values must be non-negative");
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return bad("values must be strictly increasing");
    }
    Ok(())
}

impl Config {
    pub fn models(&self) -> Models {
        Models {
            pv: self.pv.clone(),
            mppt: self.mppt.clone(),
            battery: self.battery.clone(),
            droop: self.droop.clone(),
            vsc: self.vsc.clone(),
            ac_system: self.ac_system.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.models().validate()?;
        self.scenario.validate()?;
        self.metrics.validate()?;
        self.constraints.validate()?;
        check_grid("k_d_grid", &self.sweep.k_d_grid)?;
        check_grid("sizing_grid", &self.sweep.sizing_grid)
    }

    /// Parses `text`, applies `section.key=value` overrides, then validates.
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config {
            path: "<config>".into(),
            message: one_line(&e.to_string()),
        })?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let owned;
        let source = if overrides.is_empty() {
            text
        } else {
            owned = toml::to_string(&table).map_err(|e| Error::Config {
                path: "<overrides>".into(),
                message: e.to_string(),
            })?;
            owned.as_str()
        };
        let config: Config =
            serde_path_to_error::deserialize(toml::Deserializer::new(source)).map_err(|e| {
                let path = e.path().to_string();
                let inner = e.into_inner();
                let line = inner.span().map(|s| line_of(source, s.start));
                Error::Config {
                    path,
                    message: with_line(inner.message(), line),
                }
            })?;
        config.validate().map_err(|e| match e {
            Error::InvalidParams(msg) => {
                let (path, message) = msg.split_once(": ").unwrap_or(("<config>", msg.as_str()));
                let line = path.split_once('.').and_then(|(s, k)| locate_key(text, s, k));
                Error::Config {
                    path: path.to_string(),
                    message: with_line(message, line),
                }
            }
            other => other,
        })?;
        Ok(config)
    }

    /// Reads `path` (defaults when `None`) and applies overrides.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p).map_err(|e| Error::Config {
                path: p.display().to_string(),
                message: e.to_string(),
            })?,
            None => String::new(),
        };
        Self::from_toml_str(&text, overrides)
    }

    /// The whole configuration as TOML, defaults included.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config always serializes")
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn with_line(message: &str, line: Option<usize>) -> String {
    match line {
        Some(l) => format!("{message} (line {l})"),
        None => message.to_string(),
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line of `key = ...` inside `[section]`, if written out in `text`.
fn locate_key(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name.trim().to_string();
            continue;
        }
        let Some((lhs, _)) = line.split_once('=') else {
            continue;
        };
        let lhs = lhs.trim();
        if (current == section && lhs == key) || (current.is_empty() && lhs == format!("{section}.{key}")) {
            return Some(i + 1);
        }
    }
    None
}

/// Applies one `a.b.c=value` override; `value` is a TOML literal or a bare string.
pub fn apply_override(table: &mut toml::Table, arg: &str) -> Result<()> {
    let key_path = arg.split_once('=').map_or(arg, |(k, _)| k).trim();
    let bad = |m: &str| Error::Config {
        path: key_path.to_string(),
        message: m.to_string(),
    };
    let (_, raw) = arg.split_once('=').ok_or_else(|| bad("override must look like section.key=value"))?;
    let keys: Vec<&str> = key_path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(bad("empty key segment"));
    }
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let (last, parents) = keys.split_last().expect("at least one key");
    let mut node = table;
    for k in parents {
        node = node
            .entry(k.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| bad(&format!("`{k}` is not a section")))?;
    }
    node.insert(last.to_string(), value);
    Ok(())
}
