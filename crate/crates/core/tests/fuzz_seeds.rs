//! The checked-in fuzz corpus seeds are real inputs: each one must parse,
//! except files named `bad_*`, which must be rejected with an error.

use std::path::{Path, PathBuf};

use scratchq::io::{
    decode_model, parse_features_csv, parse_labels_csv, parse_manifest, parse_predictions_csv, parse_sensor_csv,
    parse_tablet_csv,
};
use scratchq::signal::Channel;

fn seeds(target: &str) -> Vec<PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut v: Vec<PathBuf> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .collect();
    v.sort();
    assert!(!v.is_empty(), "no seeds for {target}");
    v
}

fn check(target: &str, parse: impl Fn(&[u8]) -> bool) {
    for p in seeds(target) {
        let bad = p.file_name().unwrap().to_string_lossy().starts_with("bad_");
        let ok = parse(&std::fs::read(&p).unwrap());
        assert_eq!(ok, !bad, "{}", p.display());
    }
}

fn text(b: &[u8]) -> &str {
    std::str::from_utf8(b).unwrap()
}

#[test]
fn csv_seeds() {
    check("sensor_csv", |b| parse_sensor_csv(text(b), "seed", Channel::ContactMic).is_ok());
    check("tablet_csv", |b| parse_tablet_csv(text(b), "seed").is_ok());
    check("labels_csv", |b| parse_labels_csv(text(b), "seed").is_ok());
    check("features_csv", |b| parse_features_csv(text(b), "seed").is_ok());
    check("predictions_csv", |b| parse_predictions_csv(text(b), "seed").is_ok());
}

#[test]
fn manifest_and_artifact_seeds() {
    check("manifest_json", |b| parse_manifest(text(b), "seed").is_ok());
    check("model_artifact", |b| decode_model(b).is_ok());
}
