//! Flat `key = value` configuration text and the value parsers shared with
//! the command line.
//!
//! Blank lines and lines starting with `#` are ignored. Keys are
//! case-sensitive; `-` and `_` are interchangeable.

use std::collections::BTreeMap;

use crate::generator::GeneratorSpec;
use crate::netstats::QuantityKind;
use crate::zm::ZmParams;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: expected key=value")]
    Syntax { line: usize },
    #[error("line {line}: duplicate key {key:?}")]
    Duplicate { line: usize, key: String },
    #[error("unknown key {0:?}")]
    UnknownKey(String),
    #[error("invalid value for {key}: {reason}")]
    Value { key: String, reason: String },
}

fn value_error(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Value {
        key: key.to_owned(),
        reason: reason.into(),
    }
}

/// Parses `key = value` lines into a map with `_`-normalized keys.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or(ConfigError::Syntax { line: n + 1 })?;
        let key = k.trim().replace('-', "_");
        if key.is_empty() {
            return Err(ConfigError::Syntax { line: n + 1 });
        }
        if out.insert(key.clone(), v.trim().to_owned()).is_some() {
            return Err(ConfigError::Duplicate { line: n + 1, key });
        }
    }
    Ok(out)
}

/// Non-negative integer, also accepting exact scientific notation (`1e5`).
pub fn parse_count(key: &str, text: &str) -> Result<u64, ConfigError> {
    let t = text.trim();
    if let Ok(n) = t.parse::<u64>() {
        return Ok(n);
    }
    match t.parse::<f64>() {
        Ok(x) if x >= 0.0 && x.fract() == 0.0 && x <= 9.0e15 => Ok(x as u64),
        _ => Err(value_error(
            key,
            format!("{t:?} is not a non-negative integer"),
        )),
    }
}

pub fn parse_bool(key: &str, text: &str) -> Result<bool, ConfigError> {
    match text.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(value_error(key, format!("{other:?} is not a boolean"))),
    }
}

/// Comma-separated window sizes, each at least 1.
pub fn parse_window_sizes(text: &str) -> Result<Vec<usize>, ConfigError> {
    let mut sizes = Vec::new();
    for part in text.split(',') {
        let n = parse_count("nv", part)?;
        if n < 1 {
            return Err(value_error("nv", "window sizes must be at least 1"));
        }
        sizes.push(n as usize);
    }
    Ok(sizes)
}

/// Comma-separated quantity names, or `all`.
pub fn parse_quantities(text: &str) -> Result<Vec<QuantityKind>, ConfigError> {
    if text.trim() == "all" {
        return Ok(QuantityKind::ALL.to_vec());
    }
    let mut kinds = Vec::new();
    for part in text.split(',') {
        let k: QuantityKind = part
            .trim()
            .parse()
            .map_err(|e: String| value_error("quantities", e))?;
        if !kinds.contains(&k) {
            kinds.push(k);
        }
    }
    Ok(kinds)
}

fn parse_real(key: &str, text: &str) -> Result<f64, ConfigError> {
    text.trim()
        .parse::<f64>()
        .map_err(|_| value_error(key, format!("{text:?} is not a number")))
}

impl GeneratorSpec {
    /// Builds a spec from `key = value` text. Omitted keys keep their
    /// defaults; the degree model is set when `degree_alpha` is present and
    /// then also needs `degree_delta` and `degree_dmax`.
    pub fn from_config_text(text: &str) -> Result<GeneratorSpec, ConfigError> {
        let kv = parse_key_values(text)?;
        let mut spec = GeneratorSpec::default();
        let (mut alpha, mut delta, mut dmax) = (None, None, None);
        for (key, value) in &kv {
            match key.as_str() {
                "n_isolated_pairs" => spec.n_isolated_pairs = parse_count(key, value)?,
                "supernode_leaf_count" => spec.supernode_leaf_count = parse_count(key, value)?,
                "core_size" => spec.core_size = parse_count(key, value)?,
                "core_density" => spec.core_density = parse_real(key, value)?,
                "core_leaf_count" => spec.core_leaf_count = parse_count(key, value)?,
                "degree_alpha" => alpha = Some(parse_real(key, value)?),
                "degree_delta" => delta = Some(parse_real(key, value)?),
                "degree_dmax" => dmax = Some(parse_count(key, value)?),
                "seed" => spec.seed = parse_count(key, value)?,
                _ => return Err(ConfigError::UnknownKey(key.clone())),
            }
        }
        spec.degree_model = match (alpha, delta, dmax) {
            (None, None, None) => None,
            (Some(a), Some(d), Some(m)) => Some(
                ZmParams::new(a, d, m).map_err(|e| value_error("degree_alpha", e.to_string()))?,
            ),
            _ => {
                return Err(value_error(
                    "degree_alpha",
                    "degree_alpha, degree_delta and degree_dmax must be given together",
                ))
            }
        };
        Ok(spec)
    }
}
