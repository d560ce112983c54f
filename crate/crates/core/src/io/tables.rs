//! CSV readers and writers.

use std::collections::BTreeMap;
use std::path::Path;

use super::{read_text, write_file, IoError};
use crate::activity::Activity;
use crate::dataset::{FeatureTable, Sample};
use crate::labeling::{ContactTrace, LabelError, PowerLabel, RejectReason};
use crate::signal::{Channel, TimeSeries};
use crate::spectral::Task;

pub const SCHEMA_VERSION: u32 = 1;

const SENSOR_HEADER: &[&str] = &["t_s", "value"];
const TABLET_HEADER: &[&str] = &["t_s", "x_mm", "y_mm", "force_n"];
const LABEL_HEADER: &[&str] = &[
    "participant",
    "window_start_s",
    "mean_force_n",
    "mean_velocity_mm_s",
    "power_mw",
    "valid",
    "reason",
];
const PREDICTION_HEADER: &[&str] = &[
    "participant",
    "activity",
    "window_start_s",
    "target",
    "scratch_prob",
    "power_mw",
    "vas_units",
];

/// Preamble key/values plus the CSV body.
struct Document<'a> {
    origin: &'a str,
    meta: BTreeMap<String, String>,
    body: &'a str,
    /// Lines consumed by the preamble.
    offset: u64,
}

impl<'a> Document<'a> {
    fn parse(text: &'a str, origin: &'a str) -> Result<Self, IoError> {
        let mut meta = BTreeMap::new();
        let mut pos = 0;
        let mut offset = 0;
        while text[pos..].starts_with('#') {
            let rest = &text[pos..];
            let end = rest.find('\n').map_or(rest.len(), |i| i + 1);
            if let Some((k, v)) = rest[1..end].trim().split_once('=') {
                meta.insert(k.trim().to_string(), v.trim().to_string());
            }
            pos += end;
            offset += 1;
        }
        let doc = Self {
            origin,
            meta,
            body: &text[pos..],
            offset,
        };
        match doc.meta.get("schema_version").map(String::as_str) {
            None => Err(doc.schema("missing schema_version preamble")),
            Some(v) if v == SCHEMA_VERSION.to_string() => Ok(doc),
            Some(v) => Err(doc.schema(format!("unsupported schema_version {v}"))),
        }
    }

    fn schema(&self, detail: impl Into<String>) -> IoError {
        IoError::SchemaMismatch {
            path: self.origin.to_string(),
            detail: detail.into(),
        }
    }

    fn malformed(&self, line: u64, detail: impl Into<String>) -> IoError {
        IoError::MalformedRow {
            path: self.origin.to_string(),
            line,
            detail: detail.into(),
        }
    }

    /// Header and records with their 1-based file line numbers.
    fn records(&self) -> Result<(Vec<String>, Vec<(u64, csv::StringRecord)>), IoError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(self.body.as_bytes());
        let header: Vec<String> = reader
            .headers()
            .map_err(|e| self.schema(format!("unreadable header: {e}")))?
            .iter()
            .map(str::to_string)
            .collect();
        if header.iter().all(|h| h.is_empty()) {
            return Err(self.schema("missing header row"));
        }
        let mut rows = Vec::new();
        for rec in reader.records() {
            match rec {
                Ok(r) => {
                    let line = self.offset + r.position().map_or(0, |p| p.line());
                    rows.push((line, r));
                }
                Err(e) => {
                    let line = self.offset + e.position().map_or(0, |p| p.line());
                    return Err(self.malformed(line, e.to_string()));
                }
            }
        }
        Ok((header, rows))
    }

    fn expect_header(&self, header: &[String], expected: &[&str]) -> Result<(), IoError> {
        if header.len() != expected.len() || header.iter().zip(expected).any(|(a, b)| a != b) {
            return Err(self.schema(format!(
                "expected columns '{}', found '{}'",
                expected.join(","),
                header.join(",")
            )));
        }
        Ok(())
    }

    fn field<'r>(&self, rec: &'r csv::StringRecord, i: usize, line: u64) -> Result<&'r str, IoError> {
        rec.get(i)
            .ok_or_else(|| self.malformed(line, format!("missing column {}", i + 1)))
    }

    /// Finite number; empty is an error.
    fn num(&self, rec: &csv::StringRecord, i: usize, line: u64, name: &str) -> Result<f64, IoError> {
        let s = self.field(rec, i, line)?;
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(self.malformed(line, format!("{name}: expected a finite number, got '{s}'"))),
        }
    }

    /// Finite number or empty (`None`).
    fn opt_num(&self, rec: &csv::StringRecord, i: usize, line: u64, name: &str) -> Result<Option<f64>, IoError> {
        if self.field(rec, i, line)?.is_empty() {
            Ok(None)
        } else {
            self.num(rec, i, line, name).map(Some)
        }
    }

    fn activity(&self, rec: &csv::StringRecord, i: usize, line: u64) -> Result<Activity, IoError> {
        self.field(rec, i, line)?
            .parse()
            .map_err(|e| self.malformed(line, format!("{e}")))
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| format!("{v}"))
}

fn fmt_nan(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v}")
    }
}

struct CsvOut {
    writer: csv::Writer<Vec<u8>>,
}

impl CsvOut {
    fn new(meta: &[(&str, String)], header: &[&str]) -> Self {
        let mut buf = format!("#schema_version={SCHEMA_VERSION}\n").into_bytes();
        for (k, v) in meta {
            buf.extend_from_slice(format!("#{k}={v}\n").as_bytes());
        }
        let mut writer = csv::Writer::from_writer(buf);
        writer.write_record(header).expect("in-memory write");
        Self { writer }
    }

    fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).expect("in-memory write");
    }

    fn finish(self) -> Vec<u8> {
        self.writer.into_inner().expect("in-memory flush")
    }
}

fn origin(path: &Path) -> String {
    path.display().to_string()
}

// --- sensor streams -------------------------------------------------------

/// `t_s,value`; an empty value marks a missing sample.
pub fn parse_sensor_csv(text: &str, origin: &str, channel: Channel) -> Result<TimeSeries, IoError> {
    let doc = Document::parse(text, origin)?;
    let (header, rows) = doc.records()?;
    doc.expect_header(&header, SENSOR_HEADER)?;
    let mut t = Vec::with_capacity(rows.len());
    let mut v = Vec::with_capacity(rows.len());
    for (line, rec) in &rows {
        t.push(doc.num(rec, 0, *line, "t_s")?);
        v.push(doc.opt_num(rec, 1, *line, "value")?.unwrap_or(f64::NAN));
    }
    if let Some(i) = t.windows(2).position(|w| w[1] < w[0]) {
        return Err(doc.malformed(rows[i + 1].0, "timestamps decrease"));
    }
    TimeSeries::new(channel, channel.nominal_rate_hz(), t, v).map_err(|e| IoError::signal(origin, e))
}

pub fn read_sensor_csv(path: &Path, channel: Channel) -> Result<TimeSeries, IoError> {
    parse_sensor_csv(&read_text(path)?, &origin(path), channel)
}

pub fn write_sensor_csv(path: &Path, series: &TimeSeries) -> Result<(), IoError> {
    let mut out = CsvOut::new(&[], SENSOR_HEADER);
    for (t, v) in series.timestamps().iter().zip(series.values()) {
        out.row([format!("{t}"), fmt_nan(*v)]);
    }
    write_file(path, &out.finish())
}

// --- tablet -----------------------------------------------------------------

/// Raw tablet samples for a whole session; `NaN` where there was no contact.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TabletStream {
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub force: Vec<f64>,
}

impl TabletStream {
    /// Samples with `start <= t < start + length` as a labeling block.
    pub fn block(&self, start: f64, length: f64) -> Result<ContactTrace, LabelError> {
        let lo = self.t.partition_point(|&t| t < start);
        let hi = self.t.partition_point(|&t| t < start + length);
        ContactTrace::new(
            start,
            length,
            self.t[lo..hi].to_vec(),
            self.x[lo..hi].to_vec(),
            self.y[lo..hi].to_vec(),
            self.force[lo..hi].to_vec(),
        )
    }
}

pub fn parse_tablet_csv(text: &str, origin: &str) -> Result<TabletStream, IoError> {
    let doc = Document::parse(text, origin)?;
    let (header, rows) = doc.records()?;
    doc.expect_header(&header, TABLET_HEADER)?;
    let mut s = TabletStream::default();
    let mut prev = f64::NEG_INFINITY;
    for (line, rec) in &rows {
        let t = doc.num(rec, 0, *line, "t_s")?;
        if t <= prev {
            return Err(doc.malformed(*line, "timestamps must increase"));
        }
        prev = t;
        s.t.push(t);
        s.x.push(doc.opt_num(rec, 1, *line, "x_mm")?.unwrap_or(f64::NAN));
        s.y.push(doc.opt_num(rec, 2, *line, "y_mm")?.unwrap_or(f64::NAN));
        let f = doc.opt_num(rec, 3, *line, "force_n")?;
        if f.is_some_and(|f| f < 0.0) {
            return Err(doc.malformed(*line, "force_n must be non-negative"));
        }
        s.force.push(f.unwrap_or(f64::NAN));
    }
    Ok(s)
}

pub fn read_tablet_csv(path: &Path) -> Result<TabletStream, IoError> {
    parse_tablet_csv(&read_text(path)?, &origin(path))
}

pub fn write_tablet_csv(path: &Path, s: &TabletStream) -> Result<(), IoError> {
    let mut out = CsvOut::new(&[], TABLET_HEADER);
    for i in 0..s.t.len() {
        out.row([format!("{}", s.t[i]), fmt_nan(s.x[i]), fmt_nan(s.y[i]), fmt_nan(s.force[i])]);
    }
    write_file(path, &out.finish())
}

// --- labels -----------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct LabelRecord {
    pub participant: String,
    /// Annotation of the block the window came from, when known.
    pub activity: Option<Activity>,
    pub label: PowerLabel,
}

/// Label table; an optional trailing `activity` column is accepted.
pub fn parse_labels_csv(text: &str, origin: &str) -> Result<Vec<LabelRecord>, IoError> {
    let doc = Document::parse(text, origin)?;
    let (header, rows) = doc.records()?;
    let with_activity = header.len() == LABEL_HEADER.len() + 1 && header.last().is_some_and(|h| h == "activity");
    let base = if with_activity { &header[..LABEL_HEADER.len()] } else { &header[..] };
    doc.expect_header(base, LABEL_HEADER)?;
    rows.iter()
        .map(|(line, rec)| {
            let line = *line;
            let participant = doc.field(rec, 0, line)?.to_string();
            if participant.is_empty() {
                return Err(doc.malformed(line, "empty participant"));
            }
            let window_start = doc.num(rec, 1, line, "window_start_s")?;
            let mean_force = doc.opt_num(rec, 2, line, "mean_force_n")?.unwrap_or(f64::NAN);
            let mean_velocity = doc.opt_num(rec, 3, line, "mean_velocity_mm_s")?.unwrap_or(f64::NAN);
            let power = doc.opt_num(rec, 4, line, "power_mw")?.unwrap_or(f64::NAN);
            let valid = match doc.field(rec, 5, line)? {
                "true" => true,
                "false" => false,
                other => return Err(doc.malformed(line, format!("valid: expected true/false, got '{other}'"))),
            };
            let reason = doc.field(rec, 6, line)?;
            let rejection = match (valid, reason.is_empty()) {
                (true, true) => {
                    if power.is_nan() {
                        return Err(doc.malformed(line, "valid label without power"));
                    }
                    None
                }
                (false, false) => Some(
                    reason
                        .parse::<RejectReason>()
                        .map_err(|e| doc.malformed(line, e))?,
                ),
                (true, false) => return Err(doc.malformed(line, "valid label with a reason")),
                (false, true) => return Err(doc.malformed(line, "invalid label without a reason")),
            };
            let activity = if with_activity {
                let a = doc.field(rec, 7, line)?;
                if a.is_empty() {
                    None
                } else {
                    Some(doc.activity(rec, 7, line)?)
                }
            } else {
                None
            };
            Ok(LabelRecord {
                participant,
                activity,
                label: PowerLabel {
                    window_start,
                    mean_force,
                    mean_velocity,
                    power,
                    rejection,
                },
            })
        })
        .collect()
}

pub fn read_labels_csv(path: &Path) -> Result<Vec<LabelRecord>, IoError> {
    parse_labels_csv(&read_text(path)?, &origin(path))
}

pub fn encode_labels_csv(records: &[LabelRecord]) -> Vec<u8> {
    let with_activity = records.iter().any(|r| r.activity.is_some());
    let mut header = LABEL_HEADER.to_vec();
    if with_activity {
        header.push("activity");
    }
    let mut out = CsvOut::new(&[], &header);
    for r in records {
        let l = &r.label;
        let mut row = vec![
            r.participant.clone(),
            format!("{}", l.window_start),
            fmt_nan(l.mean_force),
            fmt_nan(l.mean_velocity),
            fmt_nan(l.power),
            l.is_valid().to_string(),
            l.rejection.map_or_else(String::new, |r| r.to_string()),
        ];
        if with_activity {
            row.push(r.activity.map_or_else(String::new, |a| a.to_string()));
        }
        out.row(row);
    }
    out.finish()
}

pub fn write_labels_csv(path: &Path, records: &[LabelRecord]) -> Result<(), IoError> {
    write_file(path, &encode_labels_csv(records))
}

// --- features ---------------------------------------------------------------

fn feature_header(task: Task) -> Vec<String> {
    let mut h: Vec<String> = ["participant", "activity", "window_start_s", "target"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    h.extend((0..task.dims()).map(|i| format!("f{i}")));
    h
}

/// Unnormalized feature matrix; the task comes from the `task` preamble key.
pub fn parse_features_csv(text: &str, origin: &str) -> Result<FeatureTable, IoError> {
    let doc = Document::parse(text, origin)?;
    let task: Task = doc
        .meta
        .get("task")
        .ok_or_else(|| doc.schema("missing task preamble"))?
        .parse()
        .map_err(|e: String| doc.schema(e))?;
    let (header, rows) = doc.records()?;
    let expected = feature_header(task);
    let expected: Vec<&str> = expected.iter().map(String::as_str).collect();
    doc.expect_header(&header, &expected)?;
    let mut table = FeatureTable::new(task);
    for (line, rec) in &rows {
        let line = *line;
        if rec.len() != expected.len() {
            return Err(doc.malformed(line, format!("expected {} fields, got {}", expected.len(), rec.len())));
        }
        let participant = doc.field(rec, 0, line)?.to_string();
        if participant.is_empty() {
            return Err(doc.malformed(line, "empty participant"));
        }
        let features = (4..rec.len())
            .map(|i| doc.num(rec, i, line, "feature"))
            .collect::<Result<Vec<_>, _>>()?;
        table.samples.push(Sample {
            participant,
            activity: doc.activity(rec, 1, line)?,
            window_start: doc.num(rec, 2, line, "window_start_s")?,
            target: doc.opt_num(rec, 3, line, "target")?,
            features,
        });
    }
    Ok(table)
}

pub fn read_features_csv(path: &Path) -> Result<FeatureTable, IoError> {
    parse_features_csv(&read_text(path)?, &origin(path))
}

pub fn write_features_csv(path: &Path, table: &FeatureTable) -> Result<(), IoError> {
    let header = feature_header(table.task);
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut out = CsvOut::new(&[("task", table.task.as_str().to_string())], &header);
    for s in &table.samples {
        if s.features.len() != table.task.dims() {
            return Err(IoError::Invalid {
                path: path.display().to_string(),
                detail: format!("row has {} features, task needs {}", s.features.len(), table.task.dims()),
            });
        }
        let mut row = vec![
            s.participant.clone(),
            s.activity.to_string(),
            format!("{}", s.window_start),
            fmt_opt(s.target),
        ];
        row.extend(s.features.iter().map(|v| format!("{v}")));
        out.row(row);
    }
    write_file(path, &out.finish())
}

// --- predictions ------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRecord {
    pub participant: String,
    pub activity: Activity,
    pub window_start: f64,
    pub target: Option<f64>,
    pub scratch_prob: Option<f64>,
    pub power_mw: Option<f64>,
    pub vas_units: Option<f64>,
}

pub fn parse_predictions_csv(text: &str, origin: &str) -> Result<Vec<PredictionRecord>, IoError> {
    let doc = Document::parse(text, origin)?;
    let (header, rows) = doc.records()?;
    doc.expect_header(&header, PREDICTION_HEADER)?;
    rows.iter()
        .map(|(line, rec)| {
            let line = *line;
            Ok(PredictionRecord {
                participant: doc.field(rec, 0, line)?.to_string(),
                activity: doc.activity(rec, 1, line)?,
                window_start: doc.num(rec, 2, line, "window_start_s")?,
                target: doc.opt_num(rec, 3, line, "target")?,
                scratch_prob: doc.opt_num(rec, 4, line, "scratch_prob")?,
                power_mw: doc.opt_num(rec, 5, line, "power_mw")?,
                vas_units: doc.opt_num(rec, 6, line, "vas_units")?,
            })
        })
        .collect()
}

pub fn read_predictions_csv(path: &Path) -> Result<Vec<PredictionRecord>, IoError> {
    parse_predictions_csv(&read_text(path)?, &origin(path))
}

pub fn write_predictions_csv(path: &Path, records: &[PredictionRecord]) -> Result<(), IoError> {
    let mut out = CsvOut::new(&[], PREDICTION_HEADER);
    for r in records {
        out.row([
            r.participant.clone(),
            r.activity.to_string(),
            format!("{}", r.window_start),
            fmt_opt(r.target),
            fmt_opt(r.scratch_prob),
            fmt_opt(r.power_mw),
            fmt_opt(r.vas_units),
        ]);
    }
    write_file(path, &out.finish())
}

// --- generic ----------------------------------------------------------------

/// Named numeric columns from any CSV with a `schema_version` preamble.
/// Empty cells are an error.
pub fn read_columns(path: &Path, names: &[&str]) -> Result<Vec<Vec<f64>>, IoError> {
    let text = read_text(path)?;
    let origin = origin(path);
    let doc = Document::parse(&text, &origin)?;
    let (header, rows) = doc.records()?;
    let idx = names
        .iter()
        .map(|n| {
            header
                .iter()
                .position(|h| h == n)
                .ok_or_else(|| doc.schema(format!("no column '{n}'")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut cols = vec![Vec::with_capacity(rows.len()); names.len()];
    for (line, rec) in &rows {
        for (c, (&i, name)) in idx.iter().zip(names).enumerate() {
            cols[c].push(doc.num(rec, i, *line, name)?);
        }
    }
    Ok(cols)
}
