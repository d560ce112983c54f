//! Session manifests: one JSON file naming the stream CSVs of a recording
//! and its activity annotations.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::tables::{read_sensor_csv, read_tablet_csv, write_sensor_csv, write_tablet_csv, TabletStream, SCHEMA_VERSION};
use super::{read_text, write_file, IoError};
use crate::activity::Activity;
use crate::signal::{Channel, TimeSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SessionKind {
    IntensityStudy1,
    ValidationStudy2,
    Detection,
}

/// Stream file paths, relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Streams {
    pub contact_mic: String,
    pub accel_z: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tablet: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Annotation {
    pub start_s: f64,
    pub end_s: f64,
    pub activity: Activity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionManifest {
    pub schema_version: u32,
    pub participant_id: String,
    pub session_kind: SessionKind,
    pub streams: Streams,
    #[serde(default)]
    pub annotations: Vec<Annotation>,
}

impl SessionManifest {
    fn validate(&self, origin: &str) -> Result<(), IoError> {
        let schema = |detail: String| IoError::SchemaMismatch {
            path: origin.to_string(),
            detail,
        };
        if self.schema_version != SCHEMA_VERSION {
            return Err(schema(format!("unsupported schema_version {}", self.schema_version)));
        }
        if self.participant_id.trim().is_empty() {
            return Err(schema("participant_id is empty".into()));
        }
        let mut spans: Vec<(f64, f64)> = Vec::with_capacity(self.annotations.len());
        for a in &self.annotations {
            if !(a.start_s.is_finite() && a.end_s.is_finite() && a.start_s < a.end_s) {
                return Err(schema(format!("bad annotation range [{}, {})", a.start_s, a.end_s)));
            }
            spans.push((a.start_s, a.end_s));
        }
        spans.sort_by(|a, b| a.0.total_cmp(&b.0));
        if let Some(w) = spans.windows(2).find(|w| w[1].0 < w[0].1) {
            return Err(schema(format!("annotations overlap at {} s", w[1].0)));
        }
        Ok(())
    }
}

pub fn parse_manifest(text: &str, origin: &str) -> Result<SessionManifest, IoError> {
    let m: SessionManifest = serde_json::from_str(text).map_err(|e| IoError::SchemaMismatch {
        path: origin.to_string(),
        detail: e.to_string(),
    })?;
    m.validate(origin)?;
    Ok(m)
}

/// A manifest with its streams loaded.
#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    pub manifest: SessionManifest,
    pub cm: TimeSeries,
    pub acc: TimeSeries,
    pub tablet: Option<TabletStream>,
}

fn resolve(base: &Path, rel: &str) -> Result<PathBuf, IoError> {
    let p = base.join(rel);
    if !p.is_file() {
        return Err(IoError::MissingFile {
            path: p.display().to_string(),
        });
    }
    Ok(p)
}

pub fn load_session(manifest_path: &Path) -> Result<Session, IoError> {
    let manifest = parse_manifest(&read_text(manifest_path)?, &manifest_path.display().to_string())?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let cm_path = resolve(base, &manifest.streams.contact_mic)?;
    let acc_path = resolve(base, &manifest.streams.accel_z)?;
    let tablet_path = manifest
        .streams
        .tablet
        .as_deref()
        .map(|t| resolve(base, t))
        .transpose()?;
    Ok(Session {
        cm: read_sensor_csv(&cm_path, Channel::ContactMic)?,
        acc: read_sensor_csv(&acc_path, Channel::AccelZ)?,
        tablet: tablet_path.as_deref().map(read_tablet_csv).transpose()?,
        manifest,
    })
}

/// Writes the streams next to `manifest_path` under the names the manifest
/// gives, then the manifest itself.
pub fn save_session(manifest_path: &Path, session: &Session) -> Result<(), IoError> {
    let m = &session.manifest;
    m.validate(&manifest_path.display().to_string())?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    write_sensor_csv(&base.join(&m.streams.contact_mic), &session.cm)?;
    write_sensor_csv(&base.join(&m.streams.accel_z), &session.acc)?;
    match (&m.streams.tablet, &session.tablet) {
        (Some(p), Some(t)) => write_tablet_csv(&base.join(p), t)?,
        (None, None) => {}
        _ => {
            return Err(IoError::Invalid {
                path: manifest_path.display().to_string(),
                detail: "tablet stream and manifest entry must both be present or absent".into(),
            })
        }
    }
    let json = serde_json::to_string_pretty(m).expect("manifest serializes");
    write_file(manifest_path, json.as_bytes())
}
