//! Run manifests: what ran, with which parameters, and what it produced.

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// A numerical check a command asserts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    /// Passes when `value <= tolerance`.
    pub fn at_most(name: &str, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            passed: value <= tolerance,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Every resolved argument; feeding it back to `obrs replay` reruns the
    /// command.
    pub config: Value,
    pub seed: Option<u64>,
    pub versions: String,
    pub outputs: Vec<String>,
    pub wall_time_s: f64,
    /// Command-specific summary values.
    pub results: Value,
    pub checks: Vec<Check>,
}

impl RunManifest {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

pub fn versions() -> String {
    format!(
        "obrs-cli {} / obrs-core {}",
        env!("CARGO_PKG_VERSION"),
        obrs_core::VERSION
    )
}
