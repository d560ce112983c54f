//! CSV output for reports; every file gets the schema preamble.

use std::path::Path;

use anyhow::{Context, Result};

use scratchq::io::SCHEMA_VERSION;

pub fn num(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v}")
    }
}

pub fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, num)
}

pub fn write_csv<I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("{}: cannot create directory", dir.display()))?;
    }
    let mut w = csv::Writer::from_writer(format!("#schema_version={SCHEMA_VERSION}\n").into_bytes());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().context("flushing csv")?;
    std::fs::write(path, bytes).with_context(|| format!("{}: cannot write", path.display()))
}
