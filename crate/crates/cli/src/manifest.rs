use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;

use crate::error::CliResult;
use crate::io::write_json;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Provenance of one command run. Everything time-dependent lives here so
/// the other outputs are byte-identical across repeated runs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub inputs: BTreeMap<&'static str, PathBuf>,
    pub config: Value,
    pub artifacts: Vec<String>,
    pub started_unix_secs: u64,
    pub wall_clock_secs: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<Value>,
    pub warnings: Vec<String>,
}

pub struct Recorder {
    started: SystemTime,
    clock: Instant,
}

impl Recorder {
    pub fn start() -> Self {
        Self { started: SystemTime::now(), clock: Instant::now() }
    }

    pub fn finish(
        &self,
        command: &'static str,
        seed: u64,
        config: &impl Serialize,
        inputs: BTreeMap<&'static str, PathBuf>,
        artifacts: Vec<String>,
        timings: Option<Value>,
        warnings: Vec<String>,
    ) -> RunManifest {
        RunManifest {
            command,
            version: env!("CARGO_PKG_VERSION"),
            seed,
            inputs,
            config: serde_json::to_value(config).unwrap_or(Value::Null),
            artifacts,
            started_unix_secs: self.started.duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            wall_clock_secs: self.clock.elapsed().as_secs_f64(),
            timings,
            warnings,
        }
    }
}

pub fn write_manifest(dir: &Path, manifest: &RunManifest) -> CliResult<()> {
    write_json(&dir.join(MANIFEST_FILE), manifest)
}
