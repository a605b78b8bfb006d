//! Run manifest: what each stage produced, with content digests.
//!
//! Paths are relative to the run directory. Wall-clock timings live in a
//! separate `timings.json` so that manifests of identical runs compare equal
//! byte for byte.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::PipelineError;
use crate::persist;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TIMINGS_FILE: &str = "timings.json";
pub const MANIFEST_FORMAT: &str = "uavids-manifest";
pub const MANIFEST_VERSION: u32 = 1;

pub fn sha256_file(path: &Path) -> Result<String, PipelineError> {
    let io = |source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut reader = BufReader::new(File::open(path).map_err(io)?);
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 1 << 16];
    loop {
        let n = reader.read(&mut buf).map_err(io)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

pub fn sha256_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

impl Artifact {
    pub fn record(root: &Path, rel: &str) -> Result<Self, PipelineError> {
        let full = root.join(rel);
        let bytes = std::fs::metadata(&full)
            .map_err(|source| PipelineError::Io {
                path: full.display().to_string(),
                source,
            })?
            .len();
        Ok(Self {
            path: rel.to_string(),
            sha256: sha256_file(&full)?,
            bytes,
        })
    }

    /// `true` when the file exists with the recorded digest.
    pub fn verify(&self, root: &Path) -> bool {
        sha256_file(&root.join(&self.path)).is_ok_and(|d| d == self.sha256)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    /// Digest over the stage's settings and input digests.
    pub key: String,
    pub outputs: Vec<Artifact>,
    /// Small stage-specific facts (row counts, parameter counts, ...).
    pub summary: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Software {
    pub name: String,
    pub version: String,
}

impl Default for Software {
    fn default() -> Self {
        Self {
            name: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    /// As written in the configuration.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format: String,
    pub version: u32,
    pub software: Software,
    pub config: serde_json::Value,
    pub dataset: Option<DatasetRecord>,
    pub stages: BTreeMap<String, StageRecord>,
}

impl RunManifest {
    pub fn new(config: serde_json::Value) -> Self {
        Self {
            format: MANIFEST_FORMAT.to_string(),
            version: MANIFEST_VERSION,
            software: Software::default(),
            config,
            dataset: None,
            stages: BTreeMap::new(),
        }
    }

    /// Reads `dir/manifest.json`; `None` when absent or not a manifest this
    /// version understands.
    pub fn load(dir: &Path) -> Option<Self> {
        let m: RunManifest = persist::read_json(&dir.join(MANIFEST_FILE)).ok()?;
        (m.format == MANIFEST_FORMAT && m.version == MANIFEST_VERSION).then_some(m)
    }

    pub fn save(&self, dir: &Path) -> Result<(), PipelineError> {
        persist::write_json(self, &dir.join(MANIFEST_FILE))?;
        Ok(())
    }

    pub fn artifacts(&self) -> impl Iterator<Item = &Artifact> {
        self.stages.values().flat_map(|s| &s.outputs)
    }

    /// Paths whose file is missing or no longer matches its digest.
    pub fn stale_artifacts(&self, dir: &Path) -> Vec<String> {
        self.artifacts()
            .filter(|a| !a.verify(dir))
            .map(|a| a.path.clone())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub seconds: f64,
    /// `ran` or `cached`.
    pub status: String,
}

pub fn record_timing(dir: &Path, stage: &str, timing: StageTiming) -> Result<(), PipelineError> {
    let path = dir.join(TIMINGS_FILE);
    let mut all: BTreeMap<String, StageTiming> = persist::read_json(&path).unwrap_or_default();
    all.insert(stage.to_string(), timing);
    persist::write_json(&all, &path)?;
    Ok(())
}
