use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use chrono::Utc;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use tide::kv;

use crate::error::CliError;

pub const CHECKPOINT: &str = "checkpoint.bin";
pub const HISTORY: &str = "history.csv";
pub const METRICS: &str = "metrics.json";
pub const TIMINGS: &str = "timings.csv";
pub const MANIFEST: &str = "manifest.json";

pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(OutDir { root: root.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&self, name: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}

pub fn config_hash(pairs: &[(String, String)]) -> String {
    let digest = Sha256::digest(kv::render(pairs).as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Reproduction record written next to every command's outputs.
pub fn manifest(command: &str, pairs: &[(String, String)], seed: u64, started: Instant, extra: Value) -> Value {
    let config: serde_json::Map<String, Value> = pairs.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect();
    json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "seed": seed,
        "config_hash": config_hash(pairs),
        "config": config,
        "finished_at": Utc::now().to_rfc3339(),
        "wall_clock_s": started.elapsed().as_secs_f64(),
        "result": extra,
    })
}

pub fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}
