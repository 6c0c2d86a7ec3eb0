use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// JSON document printed to stdout by every subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub inputs: Value,
    pub results: Value,
    /// Wall-clock seconds per phase.
    pub timings: BTreeMap<String, f64>,
    pub tool_version: String,
    /// True when every check the command makes holds.
    pub passed: bool,
}

impl Report {
    pub fn new(command: &str, inputs: Value) -> Self {
        Self {
            command: command.to_string(),
            inputs,
            results: Value::Object(Default::default()),
            timings: BTreeMap::new(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            passed: true,
        }
    }

    pub fn set(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).expect("report values serialize");
        if let Value::Object(map) = &mut self.results {
            map.insert(key.to_string(), v);
        }
    }

    /// Runs `f` and records its wall time under `phase`.
    pub fn time<T>(&mut self, phase: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.timings.insert(phase.to_string(), t.elapsed().as_secs_f64());
        out
    }

    pub fn check(&mut self, ok: bool) {
        self.passed &= ok;
    }

    pub fn to_json(&self) -> String {
        bellbound::json::to_string_sig17(self).expect("report serializes")
    }
}
