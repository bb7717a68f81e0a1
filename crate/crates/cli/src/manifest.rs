//! Run manifest embedded in every output, and number formatting.

use std::collections::BTreeMap;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;

/// Lossless scientific notation, 17 significant digits.
pub fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn sci_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "nan".to_string(), sci)
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub format: &'static str,
    /// No randomness enters any computation.
    pub deterministic: bool,
    /// Seconds since the Unix epoch, only with `--stamp`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stamp: Option<u64>,
    /// Resolved parameters, SI.
    pub parameters: BTreeMap<String, Value>,
}

impl RunManifest {
    pub fn new(command: &'static str, format: &'static str, stamp: bool) -> Self {
        Self {
            tool: "twinphase",
            version: env!("CARGO_PKG_VERSION"),
            command,
            format,
            deterministic: true,
            stamp: stamp.then(|| SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())),
            parameters: BTreeMap::new(),
        }
    }

    pub fn set(&mut self, key: &str, value: impl Into<Value>) {
        self.parameters.insert(key.to_string(), value.into());
    }

    pub fn set_f64(&mut self, key: &str, value: f64) {
        self.set(key, Value::String(sci(value)));
    }

    /// `#`-prefixed header lines.
    pub fn comment_block(&self) -> String {
        let mut out = format!("# {} {} {}\n", self.tool, self.version, self.command);
        out.push_str(&format!("# format: {}\n", self.format));
        out.push_str(&format!("# deterministic: {}\n", self.deterministic));
        if let Some(s) = self.stamp {
            out.push_str(&format!("# stamp: {s}\n"));
        }
        for (k, v) in &self.parameters {
            let v = match v {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            out.push_str(&format!("# {k} = {v}\n"));
        }
        out
    }
}
