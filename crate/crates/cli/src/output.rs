//! Result files. Every CSV opens with `#` comment lines carrying the config
//! hash, seed and version; every JSON document has the same under `meta`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Meta {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
}

impl Meta {
    pub fn new(command: &str, config_hash: String, seed: u64) -> Self {
        Meta { command: command.to_string(), config_hash, seed, version: VERSION.to_string() }
    }
}

/// First 16 hex digits of the SHA-256 of a value's JSON form.
pub fn hash_of<T: Serialize>(value: &T) -> String {
    let canonical = serde_json::to_string(value).expect("value serializes");
    Sha256::digest(canonical.as_bytes()).iter().take(8).map(|b| format!("{b:02x}")).collect()
}

pub struct OutputDir {
    root: PathBuf,
    meta: Meta,
}

impl OutputDir {
    pub fn create(root: &Path, meta: Meta) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|source| CliError::Io { path: root.display().to_string(), source })?;
        Ok(OutputDir { root: root.to_path_buf(), meta })
    }

    /// `extra` lines are added to the header as further `# ` comments.
    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>], extra: &[String]) -> Result<(), CliError> {
        let mut buf = format!(
            "# config_hash={}\n# seed={}\n# version={}\n",
            self.meta.config_hash, self.meta.seed, self.meta.version
        );
        for line in extra {
            buf.push_str("# ");
            buf.push_str(line);
            buf.push('\n');
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for row in rows {
            w.write_record(row)?;
        }
        let body = w.into_inner().map_err(|e| CliError::Io { path: name.into(), source: e.into_error() })?;
        buf.push_str(&String::from_utf8(body).expect("csv output is utf-8"));
        self.write(name, buf)
    }

    /// Writes `{"meta": ..., **body}`; `body` must be a JSON object.
    pub fn json(&mut self, name: &str, body: Value) -> Result<(), CliError> {
        let mut doc = json!({ "meta": self.meta });
        if let (Some(target), Value::Object(fields)) = (doc.as_object_mut(), body) {
            target.extend(fields);
        }
        let mut text = serde_json::to_string_pretty(&doc)?;
        text.push('\n');
        self.write(name, text)
    }

    fn write(&self, name: &str, text: String) -> Result<(), CliError> {
        let path = self.root.join(name);
        fs::write(&path, text).map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
        Ok(())
    }
}

/// Shortest round-trip form, so reruns are byte-identical.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// JSON has no infinities; they are written as strings.
pub fn jnum(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!(num(x))
    }
}
