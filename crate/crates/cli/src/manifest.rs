//! Run manifests: written before a computation starts, finalized after.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use pohozaev::ProblemParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Running,
    Finished,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: usize,
    #[serde(rename = "R")]
    pub radius: Option<f64>,
}

/// Everything that determines a run's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunInputs {
    pub command: String,
    pub params: ProblemParams,
    pub grid: GridSpec,
    /// Command-specific settings (branch, masses, ...), as JSON.
    pub extra: serde_json::Value,
    pub version: String,
}

impl RunInputs {
    pub fn new(command: &str, params: ProblemParams, grid: GridSpec, extra: serde_json::Value) -> Self {
        Self { command: command.into(), params, grid, extra, version: env!("CARGO_PKG_VERSION").into() }
    }

    /// SHA-256 of the canonical JSON of the inputs.
    pub fn hash(&self) -> String {
        let canonical = crate::json::to_string(self);
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    #[serde(flatten)]
    pub inputs: RunInputs,
    pub input_hash: String,
    pub status: Status,
    /// Seconds since the Unix epoch.
    pub started: u64,
    pub finished: Option<u64>,
    pub outputs: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

impl RunManifest {
    pub fn start(inputs: RunInputs) -> Self {
        let input_hash = inputs.hash();
        Self { inputs, input_hash, status: Status::Running, started: now(), finished: None, outputs: Vec::new(), error: None }
    }

    pub fn finish(&mut self, outputs: Vec<String>) {
        self.status = Status::Finished;
        self.finished = Some(now());
        self.outputs = outputs;
    }

    pub fn fail(&mut self, error: String) {
        self.status = Status::Failed;
        self.finished = Some(now());
        self.error = Some(error);
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        crate::json::write(&dir.join("manifest.json"), self)
    }

    pub fn read(dir: &Path) -> Option<Self> {
        let text = std::fs::read_to_string(dir.join("manifest.json")).ok()?;
        serde_json::from_str(&text).ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inputs(mu: f64) -> RunInputs {
        let params = ProblemParams::new(3, 2.0, 2.5, 4.0, 1.0, mu).unwrap();
        RunInputs::new("solve", params, GridSpec { n: 4000, radius: None }, serde_json::json!({"branch": "plus"}))
    }

    #[test]
    fn hash_is_deterministic_and_sensitive() {
        assert_eq!(inputs(1.0).hash(), inputs(1.0).hash());
        assert_ne!(inputs(1.0).hash(), inputs(1.0 + 1e-15).hash());
        assert_eq!(inputs(1.0).hash().len(), 64);
    }

    #[test]
    fn manifest_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = RunManifest::start(inputs(2.0));
        m.write(dir.path()).unwrap();
        assert_eq!(RunManifest::read(dir.path()).unwrap().status, Status::Running);
        m.finish(vec!["record.json".into()]);
        m.write(dir.path()).unwrap();
        let back = RunManifest::read(dir.path()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.inputs.hash(), back.input_hash);
    }
}
