//! Run manifests and content-digest caching. A stage is skipped when its
//! cache key matches the previous manifest and all recorded outputs still
//! hash to their recorded digests; timestamps play no role.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use super::PipelineError;

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const MANIFEST_FILE: &str = "manifest.json";

pub fn sha256_hex(data: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(data);
    hex_string(&hasher.finalize())
}

pub fn file_sha256(path: &Path) -> Result<String, PipelineError> {
    let mut file = std::fs::File::open(path)
        .map_err(|e| PipelineError::Config(format!("cannot open {}: {e}", path.display())))?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let read = file.read(&mut buf)?;
        if read == 0 {
            break;
        }
        hasher.update(&buf[..read]);
    }
    Ok(hex_string(&hasher.finalize()))
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    /// Content-derived cache key of this stage's inputs and parameters.
    pub key: String,
    pub cached: bool,
    pub outputs: Vec<FileDigest>,
    pub counters: BTreeMap<String, u64>,
    /// Wall-clock duration; excluded from the persisted manifest so that
    /// equivalent runs stay byte-identical.
    #[serde(skip)]
    pub duration_ms: u128,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact_version: String,
    pub config_hash: String,
    pub seed: u64,
    pub stages: Vec<StageRecord>,
    pub counters: BTreeMap<String, u64>,
}

impl RunManifest {
    pub fn new(config_hash: String, seed: u64) -> Self {
        RunManifest {
            artifact_version: ARTIFACT_VERSION.to_owned(),
            config_hash,
            seed,
            stages: Vec::new(),
            counters: BTreeMap::new(),
        }
    }

    pub fn stage(&self, name: &str) -> Option<&StageRecord> {
        self.stages.iter().find(|s| s.name == name)
    }

    pub fn counter(&self, name: &str) -> u64 {
        self.counters.get(name).copied().unwrap_or(0)
    }

    pub fn load(out_dir: &Path) -> Option<RunManifest> {
        let text = std::fs::read_to_string(out_dir.join(MANIFEST_FILE)).ok()?;
        serde_json::from_str(&text).ok()
    }

    pub fn save(&self, out_dir: &Path) -> Result<(), PipelineError> {
        let mut text = serde_json::to_string_pretty(self)
            .map_err(|e| PipelineError::Config(format!("manifest serialization: {e}")))?;
        text.push('\n');
        std::fs::write(out_dir.join(MANIFEST_FILE), text)?;
        Ok(())
    }
}

/// Cache key of one stage: artifact version, stage name, the semantic
/// config digest and the keys of every upstream stage.
pub fn stage_key(stage: &str, config_hash: &str, upstream: &BTreeMap<String, String>) -> String {
    let canonical = json!({
        "artifact_version": ARTIFACT_VERSION,
        "config_hash": config_hash,
        "stage": stage,
        "upstream": upstream,
    });
    sha256_hex(canonical.to_string().as_bytes())
}

/// True when every recorded output file still exists with its recorded
/// digest.
pub fn outputs_verify(out_dir: &Path, outputs: &[FileDigest]) -> bool {
    outputs.iter().all(|o| {
        file_sha256(&out_dir.join(&o.file)).map(|d| d == o.sha256).unwrap_or(false)
    })
}

/// Digests a list of freshly written outputs, path-relative to `out_dir`.
pub fn digest_outputs(out_dir: &Path, files: &[String]) -> Result<Vec<FileDigest>, PipelineError> {
    let mut sorted = files.to_vec();
    sorted.sort();
    sorted
        .into_iter()
        .map(|file| {
            let sha256 = file_sha256(&out_dir.join(&file))?;
            Ok(FileDigest { file, sha256 })
        })
        .collect()
}
