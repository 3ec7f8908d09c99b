//! Run configuration files and the small text formats shared with the CLI.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl OutputFormat {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            _ => Err(Error::Parse(format!("unknown format '{name}' (expected csv or json)"))),
        }
    }
}

/// Parameters read from a JSON file; every field but `schema` is optional and
/// command-line flags take precedence.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entry: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entries: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_eps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub average: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suite: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<OutputFormat>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn new() -> Self {
        Self { schema: SCHEMA_VERSION, ..Default::default() }
    }

    /// Checks ranges that do not depend on the command.
    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA_VERSION {
            return Err(Error::Parse(format!("unsupported schema {} (expected {SCHEMA_VERSION})", self.schema)));
        }
        if let Some(p) = &self.point {
            check_point(p)?;
        }
        if let Some(s) = &self.s {
            if s.is_empty() {
                return Err(Error::Parse("s list is empty".into()));
            }
            for &v in s {
                check_order_value(v)?;
            }
        }
        if let Some(e) = &self.eps {
            if e.is_empty() || e.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(Error::Parse("eps values must be positive and finite".into()));
            }
        }
        if self.n_eps.is_some_and(|n| n < 3) {
            return Err(Error::Parse("n_eps must be at least 3".into()));
        }
        Ok(())
    }

    /// Fields set in `flags` replace those of `self`.
    pub fn overlay(self, flags: RunConfig) -> RunConfig {
        RunConfig {
            schema: self.schema,
            entry: flags.entry.or(self.entry),
            entries: flags.entries.or(self.entries),
            point: flags.point.or(self.point),
            s: flags.s.or(self.s),
            eps: flags.eps.or(self.eps),
            n_eps: flags.n_eps.or(self.n_eps),
            average: flags.average.or(self.average),
            suite: flags.suite.or(self.suite),
            output: flags.output.or(self.output),
            format: flags.format.or(self.format),
            seed: flags.seed.or(self.seed),
        }
    }
}

/// Parses and validates a JSON run configuration.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Parse(format!("config: {e}")))?;
    cfg.validate()?;
    Ok(cfg)
}

fn check_point(p: &[f64]) -> Result<()> {
    if p.is_empty() || p.len() > 3 {
        return Err(Error::Parse(format!("a point needs 1 to 3 coordinates, got {}", p.len())));
    }
    if p.iter().any(|v| !v.is_finite()) {
        return Err(Error::Parse("point coordinates must be finite".into()));
    }
    Ok(())
}

fn check_order_value(s: f64) -> Result<()> {
    if !(s > 0.5 && s < 1.0) {
        return Err(Error::Parse(format!("s = {s} is outside (1/2, 1)")));
    }
    Ok(())
}

/// Comma-separated finite numbers, e.g. `0.3,-1e-2`.
pub fn parse_list(text: &str) -> Result<Vec<f64>> {
    let text = text.trim();
    if text.is_empty() {
        return Err(Error::Parse("empty list".into()));
    }
    text.split(',')
        .map(|t| {
            let t = t.trim();
            let v: f64 = t.parse().map_err(|_| Error::Parse(format!("'{t}' is not a number")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::Parse(format!("'{t}' is not finite")))
            }
        })
        .collect()
}

/// A point in 1 to 3 dimensions, written `x0,x1,...`.
pub fn parse_point(text: &str) -> Result<Vec<f64>> {
    let p = parse_list(text)?;
    check_point(&p)?;
    Ok(p)
}

/// A list of orders, each in `(1/2, 1)`.
pub fn parse_orders(text: &str) -> Result<Vec<f64>> {
    let s = parse_list(text)?;
    for &v in &s {
        check_order_value(v)?;
    }
    Ok(s)
}
