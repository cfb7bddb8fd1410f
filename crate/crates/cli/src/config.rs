//! `key = value` config files and manifest replay.

use std::collections::BTreeMap;
use std::path::Path;

use qrpca::SolverConfig;
use serde_json::{Map, Value};

use crate::UsageError;

/// Keys accepted besides the solver settings.
pub const RUN_KEYS: &[&str] = &[
    "frames",
    "out",
    "resize",
    "crib",
    "task",
    "pred",
    "gt",
    "report",
    "tau",
    "frame_mean",
];

/// Settings collected from a config source, split into solver settings and
/// everything else.
#[derive(Debug, Default, Clone)]
pub struct ConfigLayer {
    pub solver: Map<String, Value>,
    pub run: BTreeMap<String, Value>,
}

impl ConfigLayer {
    pub fn str(&self, key: &str) -> Option<String> {
        self.run.get(key).map(|v| match v {
            Value::String(s) => s.clone(),
            other => other.to_string(),
        })
    }

    pub fn bool(&self, key: &str) -> Result<Option<bool>, UsageError> {
        match self.run.get(key) {
            None => Ok(None),
            Some(Value::Bool(b)) => Ok(Some(*b)),
            Some(v) => Err(UsageError(format!("{key} must be true or false, got {v}"))),
        }
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>, UsageError> {
        match self.run.get(key) {
            None => Ok(None),
            Some(v) => v
                .as_f64()
                .map(Some)
                .ok_or_else(|| UsageError(format!("{key} must be a number, got {v}"))),
        }
    }
}

pub fn solver_keys() -> Vec<String> {
    match serde_json::to_value(SolverConfig::default()) {
        Ok(Value::Object(map)) => map.keys().cloned().collect(),
        _ => Vec::new(),
    }
}

fn parse_value(key: &str, raw: &str) -> Value {
    if matches!(key, "rho1" | "rho2") && matches!(raw, "auto" | "none") {
        return Value::Null;
    }
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

fn insert(
    layer: &mut ConfigLayer,
    solver: &[String],
    key: &str,
    value: Value,
) -> Result<(), UsageError> {
    if solver.iter().any(|k| k == key) {
        layer.solver.insert(key.to_string(), value);
    } else if RUN_KEYS.contains(&key) {
        layer.run.insert(key.to_string(), value);
    } else {
        return Err(UsageError(format!("unknown config key '{key}'")));
    }
    Ok(())
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_key_values(text: &str) -> Result<ConfigLayer, UsageError> {
    let solver = solver_keys();
    let mut layer = ConfigLayer::default();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, raw)) = line.split_once('=') else {
            return Err(UsageError(format!(
                "line {}: expected 'key = value'",
                no + 1
            )));
        };
        let key = key.trim();
        insert(&mut layer, &solver, key, parse_value(key, raw.trim()))?;
    }
    Ok(layer)
}

/// Reads the `config`, `input`, `resize` and `crib` entries of a manifest
/// written by `decompose`.
pub fn parse_manifest(value: &Value) -> Result<ConfigLayer, UsageError> {
    let solver = solver_keys();
    let mut layer = ConfigLayer::default();
    let config = value
        .get("config")
        .and_then(Value::as_object)
        .ok_or_else(|| UsageError("manifest has no 'config' object".into()))?;
    for (k, v) in config {
        if !solver.contains(k) {
            return Err(UsageError(format!("unknown config key '{k}' in manifest")));
        }
        layer.solver.insert(k.clone(), v.clone());
    }
    if let Some(v) = value.get("input") {
        layer.run.insert("frames".into(), v.clone());
    }
    for key in ["resize", "crib"] {
        if let Some(v) = value.get(key).filter(|v| !v.is_null()) {
            layer.run.insert(key.into(), v.clone());
        }
    }
    Ok(layer)
}

/// Loads a config source: a manifest if the file holds a JSON object,
/// otherwise a `key = value` file.
pub fn load(path: &Path) -> Result<ConfigLayer, UsageError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
    match serde_json::from_str::<Value>(&text) {
        Ok(v @ Value::Object(_)) => parse_manifest(&v),
        _ => parse_key_values(&text),
    }
}

/// Defaults, then `file`, then `flags`.
pub fn merge_solver(
    file: &Map<String, Value>,
    flags: &Map<String, Value>,
) -> Result<SolverConfig, UsageError> {
    let mut base = match serde_json::to_value(SolverConfig::default()) {
        Ok(Value::Object(map)) => map,
        _ => Map::new(),
    };
    for (k, v) in file.iter().chain(flags) {
        base.insert(k.clone(), v.clone());
    }
    let cfg: SolverConfig = serde_json::from_value(Value::Object(base))
        .map_err(|e| UsageError(format!("invalid configuration: {e}")))?;
    cfg.validate().map_err(|e| UsageError(e.to_string()))?;
    Ok(cfg)
}

/// `WIDTHxHEIGHT`.
pub fn parse_resize(s: &str) -> Result<(u32, u32), UsageError> {
    let bad = || UsageError(format!("resize must look like 320x240, got '{s}'"));
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let w: u32 = w.trim().parse().map_err(|_| bad())?;
    let h: u32 = h.trim().parse().map_err(|_| bad())?;
    if w == 0 || h == 0 {
        return Err(bad());
    }
    Ok((w, h))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_values() {
        let layer = parse_key_values(
            "# comment\niters = 3\nrho1 = auto\nframes = in/dir # trailing\n\nwarm_start=false\n",
        )
        .unwrap();
        assert_eq!(layer.solver["iters"], Value::from(3));
        assert_eq!(layer.solver["rho1"], Value::Null);
        assert_eq!(layer.solver["warm_start"], Value::Bool(false));
        assert_eq!(layer.str("frames").as_deref(), Some("in/dir"));
        assert!(parse_key_values("bogus = 1").is_err());
        assert!(parse_key_values("iters 3").is_err());
    }

    #[test]
    fn precedence() {
        let file = parse_key_values("iters = 3\nmu0 = 0.5").unwrap();
        let mut flags = Map::new();
        flags.insert("iters".into(), Value::from(7));
        let cfg = merge_solver(&file.solver, &flags).unwrap();
        assert_eq!(cfg.iters, 7);
        assert_eq!(cfg.mu0, 0.5);
        assert_eq!(cfg.rho, SolverConfig::default().rho);
        let bad = parse_key_values("iters = many").unwrap();
        assert!(merge_solver(&bad.solver, &Map::new()).is_err());
    }

    #[test]
    fn resize_spec() {
        assert_eq!(parse_resize("320x240").unwrap(), (320, 240));
        assert!(parse_resize("320").is_err());
        assert!(parse_resize("0x5").is_err());
    }
}
