//! On-disk formats: CSV tables, session manifests and binary model artifacts.
//!
//! Every CSV starts with `#`-prefixed `key=value` lines; `schema_version` is
//! mandatory. Readers reject malformed input instead of coercing it.

mod artifact;
mod manifest;
mod tables;

use std::path::Path;

use thiserror::Error;

use crate::signal::SignalError;
use crate::spectral::Task;

pub use artifact::{
    decode_model, encode_model, load_model, model_task, save_model, ARTIFACT_MAGIC, ARTIFACT_VERSION,
};
pub use manifest::{
    load_session, parse_manifest, save_session, Annotation, Session, SessionKind, SessionManifest,
    Streams,
};
pub use tables::{
    encode_labels_csv, parse_features_csv, parse_labels_csv, parse_predictions_csv, parse_sensor_csv, parse_tablet_csv,
    read_columns, read_features_csv, read_labels_csv, read_predictions_csv, read_sensor_csv,
    read_tablet_csv, write_features_csv, write_labels_csv, write_predictions_csv, write_sensor_csv,
    write_tablet_csv, LabelRecord, PredictionRecord, TabletStream, SCHEMA_VERSION,
};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: file not found")]
    MissingFile { path: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: schema mismatch: {detail}")]
    SchemaMismatch { path: String, detail: String },
    #[error("{path}:{line}: {detail}")]
    MalformedRow { path: String, line: u64, detail: String },
    #[error("artifact checksum does not match its contents")]
    ChecksumFailure,
    #[error("artifact format version {found} is not supported")]
    VersionUnsupported { found: u32 },
    #[error("model was trained for {found} but {expected} was requested")]
    TaskMismatch { expected: Task, found: Task },
    #[error("malformed artifact: {0}")]
    ArtifactMalformed(String),
    #[error("{path}: {detail}")]
    Invalid { path: String, detail: String },
}

impl IoError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        if source.kind() == std::io::ErrorKind::NotFound {
            IoError::MissingFile {
                path: path.display().to_string(),
            }
        } else {
            IoError::Io {
                path: path.display().to_string(),
                source,
            }
        }
    }

    pub(crate) fn signal(path: &str, e: SignalError) -> Self {
        IoError::Invalid {
            path: path.to_string(),
            detail: e.to_string(),
        }
    }
}

pub(crate) fn read_text(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|e| IoError::io(path, e))
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| IoError::io(parent, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| IoError::io(path, e))
}
