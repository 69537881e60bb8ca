//! Optional JSON config file backing the command-line flags.
//!
//! The file holds a flat object whose keys mirror the flag names (snake
//! case); explicit flags always win over file values, and built-in defaults
//! apply last.

use std::path::{Path, PathBuf};

use crate::CliError;

/// Parsed config file contents; an absent file behaves as an empty object.
pub struct FileConfig {
    map: serde_json::Map<String, serde_json::Value>,
}

impl FileConfig {
    pub fn empty() -> Self {
        Self { map: serde_json::Map::new() }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("config {}: {e}", path.display())))?;
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))?;
        match value {
            serde_json::Value::Object(map) => Ok(Self { map }),
            _ => Err(CliError::Validation(format!(
                "config {}: expected a JSON object",
                path.display()
            ))),
        }
    }

    pub fn u64(&self, key: &str) -> Option<u64> {
        self.map.get(key).and_then(|v| v.as_u64())
    }

    pub fn usize(&self, key: &str) -> Option<usize> {
        self.u64(key).map(|v| v as usize)
    }

    pub fn f64(&self, key: &str) -> Option<f64> {
        self.map.get(key).and_then(|v| v.as_f64())
    }

    pub fn bool(&self, key: &str) -> Option<bool> {
        self.map.get(key).and_then(|v| v.as_bool())
    }

    pub fn string(&self, key: &str) -> Option<String> {
        self.map.get(key).and_then(|v| v.as_str()).map(str::to_owned)
    }

    pub fn path(&self, key: &str) -> Option<PathBuf> {
        self.string(key).map(PathBuf::from)
    }
}
