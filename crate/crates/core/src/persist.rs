//! The versioned JSON container shared by autoencoder and classifier files.
//!
//! Float arrays are stored as base64 of their little-endian IEEE-754 bytes so
//! a load reproduces every weight bit-for-bit. See `docs/model-format.md`.

use std::fs;
use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub const FORMAT_TAG: &str = "uavids-model";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ContainerError {
    #[error("cannot access model file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("corrupt model file: {0}")]
    Corrupt(String),
    #[error("unsupported model file: expected {expected}, found {found}")]
    Unsupported { expected: String, found: String },
    #[error("model file shape header mismatch: {0}")]
    ShapeHeader(String),
}

/// Common header fields every container starts with.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Header {
    pub format: String,
    pub version: u32,
    pub kind: String,
}

impl Header {
    pub fn new(kind: &str) -> Self {
        Self {
            format: FORMAT_TAG.to_string(),
            version: FORMAT_VERSION,
            kind: kind.to_string(),
        }
    }

    pub fn check(&self, kind: &str) -> Result<(), ContainerError> {
        if self.format != FORMAT_TAG || self.version != FORMAT_VERSION {
            return Err(ContainerError::Unsupported {
                expected: format!("{FORMAT_TAG} v{FORMAT_VERSION}"),
                found: format!("{} v{}", self.format, self.version),
            });
        }
        if self.kind != kind {
            return Err(ContainerError::Unsupported {
                expected: format!("kind {kind}"),
                found: format!("kind {}", self.kind),
            });
        }
        Ok(())
    }
}

/// A float array serialized as base64 of little-endian `f64` bytes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct F64Blob(pub Vec<f64>);

impl F64Blob {
    pub fn encode(values: &[f64]) -> String {
        let mut bytes = Vec::with_capacity(values.len() * 8);
        for v in values {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        STANDARD.encode(bytes)
    }

    pub fn decode(text: &str) -> Result<Vec<f64>, ContainerError> {
        let bytes = STANDARD
            .decode(text)
            .map_err(|e| ContainerError::Corrupt(format!("bad float blob: {e}")))?;
        if bytes.len() % 8 != 0 {
            return Err(ContainerError::Corrupt(format!(
                "float blob length {} is not a multiple of 8",
                bytes.len()
            )));
        }
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect())
    }

    pub fn expect_len(&self, len: usize, what: &str) -> Result<(), ContainerError> {
        if self.0.len() != len {
            return Err(ContainerError::ShapeHeader(format!(
                "{what} holds {} values, header implies {len}",
                self.0.len()
            )));
        }
        Ok(())
    }
}

impl Serialize for F64Blob {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&Self::encode(&self.0))
    }
}

impl<'de> Deserialize<'de> for F64Blob {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        Self::decode(&text)
            .map(F64Blob)
            .map_err(serde::de::Error::custom)
    }
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), ContainerError> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| ContainerError::Corrupt(format!("serialization failed: {e}")))?;
    fs::write(path, text + "\n").map_err(|source| ContainerError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, ContainerError> {
    let text = fs::read_to_string(path).map_err(|source| ContainerError::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| ContainerError::Corrupt(e.to_string()))
}

/// Reads only the header, so callers can dispatch on `kind`.
pub fn peek_header(path: &Path) -> Result<Header, ContainerError> {
    read_json(path)
}
