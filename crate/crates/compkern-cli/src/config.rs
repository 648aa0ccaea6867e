//! Flat JSON config files. Precedence: command-line flags > config file >
//! built-in defaults.

use serde_json::{Map, Value};
use std::path::Path;

/// A loaded (possibly empty) config file: one flat JSON object whose keys
/// match the long flag names with `-` replaced by `_`.
pub struct FileConfig {
    values: Map<String, Value>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, String> {
        let values = match path {
            None => Map::new(),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| format!("cannot read config {}: {e}", p.display()))?;
                let parsed: Value = serde_json::from_str(&text)
                    .map_err(|e| format!("invalid config {}: {e}", p.display()))?;
                match parsed {
                    Value::Object(map) => map,
                    _ => return Err(format!("config {} must be a JSON object", p.display())),
                }
            }
        };
        Ok(FileConfig { values })
    }

    fn get(&self, key: &str) -> Option<&Value> {
        self.values.get(key)
    }

    pub fn string(&self, key: &str, cli: Option<String>) -> Option<String> {
        cli.or_else(|| self.get(key).and_then(|v| v.as_str().map(String::from)))
    }

    pub fn f64(&self, key: &str, cli: Option<f64>) -> Result<Option<f64>, String> {
        if cli.is_some() {
            return Ok(cli);
        }
        match self.get(key) {
            None => Ok(None),
            Some(Value::Number(n)) => Ok(n.as_f64()),
            Some(Value::String(s)) => s
                .parse::<f64>()
                .map(Some)
                .map_err(|_| format!("config key {key:?}: invalid number {s:?}")),
            Some(other) => Err(format!("config key {key:?}: expected a number, got {other}")),
        }
    }

    pub fn u64(&self, key: &str, cli: Option<u64>) -> Result<Option<u64>, String> {
        if cli.is_some() {
            return Ok(cli);
        }
        match self.get(key) {
            None => Ok(None),
            Some(Value::Number(n)) => n
                .as_u64()
                .map(Some)
                .ok_or_else(|| format!("config key {key:?}: expected a nonnegative integer")),
            Some(other) => Err(format!("config key {key:?}: expected an integer, got {other}")),
        }
    }

    pub fn usize(&self, key: &str, cli: Option<usize>) -> Result<Option<usize>, String> {
        Ok(self.u64(key, cli.map(|v| v as u64))?.map(|v| v as usize))
    }

    /// Flags: a `true` on the command line wins; otherwise the config value.
    pub fn flag(&self, key: &str, cli: bool) -> Result<bool, String> {
        if cli {
            return Ok(true);
        }
        match self.get(key) {
            None => Ok(false),
            Some(Value::Bool(b)) => Ok(*b),
            Some(other) => Err(format!("config key {key:?}: expected a boolean, got {other}")),
        }
    }
}
