//! Binary model artifacts.
//!
//! Layout (all integers u32 LE, all floats f64 LE):
//!
//! ```text
//! magic "SCRQMODL" | version | task tag u8 (0 intensity, 1 detection)
//! config JSON length | config JSON bytes
//! scaler flag u8 | [dims | min × dims | max × dims]
//! layer count | per layer: inputs | outputs | weights (row-major) | bias
//! history count | per epoch: epoch | train loss | eval loss (NaN if none)
//! SHA-256 of everything above
//! ```

use std::path::Path;

use sha2::{Digest, Sha256};

use super::{write_file, IoError};
use crate::mlp::{Dense, EpochRecord, MlpConfig, MlpModel};
use crate::spectral::{MinMaxScaler, Task};

pub const ARTIFACT_MAGIC: &[u8; 8] = b"SCRQMODL";
pub const ARTIFACT_VERSION: u32 = 1;
const DIGEST_LEN: usize = 32;

fn task_tag(task: Task) -> u8 {
    match task {
        Task::Intensity => 0,
        Task::Detection => 1,
    }
}

struct Writer(Vec<u8>);

impl Writer {
    fn u32(&mut self, v: usize) {
        let v = u32::try_from(v).expect("artifact field fits in u32");
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn f64s(&mut self, vs: &[f64]) {
        for v in vs {
            self.0.extend_from_slice(&v.to_le_bytes());
        }
    }
}

pub fn encode_model(model: &MlpModel, task: Task) -> Vec<u8> {
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(ARTIFACT_MAGIC);
    w.u32(ARTIFACT_VERSION as usize);
    w.0.push(task_tag(task));
    let config = serde_json::to_vec(&model.config).expect("config serializes");
    w.u32(config.len());
    w.0.extend_from_slice(&config);
    match &model.scaler {
        Some(s) => {
            w.0.push(1);
            w.u32(s.dims());
            w.f64s(&s.min);
            w.f64s(&s.max);
        }
        None => w.0.push(0),
    }
    w.u32(model.layers.len());
    for l in &model.layers {
        w.u32(l.inputs);
        w.u32(l.outputs);
        w.f64s(&l.weights);
        w.f64s(&l.bias);
    }
    w.u32(model.history.len());
    for h in &model.history {
        w.u32(h.epoch);
        w.f64s(&[h.train_loss, h.eval_loss.unwrap_or(f64::NAN)]);
    }
    let digest = Sha256::digest(&w.0);
    w.0.extend_from_slice(&digest);
    w.0
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

fn malformed(what: &str) -> IoError {
    IoError::ArtifactMalformed(what.to_string())
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], IoError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| malformed("unexpected end of data"))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, IoError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<usize, IoError> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes(b.try_into().expect("4 bytes")) as usize)
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>, IoError> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| malformed("length overflow"))?)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }
}

/// Decodes an artifact, verifying the checksum before anything else.
pub fn decode_model(bytes: &[u8]) -> Result<(Task, MlpModel), IoError> {
    if bytes.len() < ARTIFACT_MAGIC.len() + 4 + DIGEST_LEN {
        return Err(IoError::ChecksumFailure);
    }
    let (body, digest) = bytes.split_at(bytes.len() - DIGEST_LEN);
    if Sha256::digest(body).as_slice() != digest {
        return Err(IoError::ChecksumFailure);
    }
    let mut r = Reader { buf: body, pos: 0 };
    if r.take(ARTIFACT_MAGIC.len())? != ARTIFACT_MAGIC {
        return Err(malformed("bad magic"));
    }
    let version = r.u32()?;
    if version != ARTIFACT_VERSION as usize {
        return Err(IoError::VersionUnsupported { found: version as u32 });
    }
    let task = match r.u8()? {
        0 => Task::Intensity,
        1 => Task::Detection,
        t => return Err(malformed(&format!("unknown task tag {t}"))),
    };
    let config_len = r.u32()?;
    let config: MlpConfig = serde_json::from_slice(r.take(config_len)?)
        .map_err(|e| malformed(&format!("config: {e}")))?;
    let scaler = match r.u8()? {
        0 => None,
        1 => {
            let dims = r.u32()?;
            let min = r.f64s(dims)?;
            let max = r.f64s(dims)?;
            Some(MinMaxScaler { min, max })
        }
        f => return Err(malformed(&format!("bad scaler flag {f}"))),
    };
    let n_layers = r.u32()?;
    if n_layers + 1 != config.layer_sizes.len() {
        return Err(malformed("layer count does not match config"));
    }
    let mut layers = Vec::with_capacity(n_layers);
    for _ in 0..n_layers {
        let inputs = r.u32()?;
        let outputs = r.u32()?;
        let n = inputs
            .checked_mul(outputs)
            .ok_or_else(|| malformed("layer size overflow"))?;
        let weights = r.f64s(n)?;
        let bias = r.f64s(outputs)?;
        layers.push(Dense {
            inputs,
            outputs,
            weights,
            bias,
        });
    }
    let n_hist = r.u32()?;
    let mut history = Vec::with_capacity(n_hist.min(body.len() / 20));
    for _ in 0..n_hist {
        let epoch = r.u32()?;
        let v = r.f64s(2)?;
        history.push(EpochRecord {
            epoch,
            train_loss: v[0],
            eval_loss: (!v[1].is_nan()).then_some(v[1]),
        });
    }
    if r.pos != body.len() {
        return Err(malformed("trailing bytes"));
    }
    let mut model = MlpModel::from_layers(config, layers).map_err(|e| malformed(&e.to_string()))?;
    if let Some(s) = &scaler {
        if s.dims() != model.input_size() {
            return Err(malformed("scaler width does not match the input layer"));
        }
    }
    model.scaler = scaler;
    model.history = history;
    Ok((task, model))
}

pub fn save_model(path: &Path, model: &MlpModel, task: Task) -> Result<(), IoError> {
    write_file(path, &encode_model(model, task))
}

/// Loads an artifact; with `expected` set, a model for the other task is a
/// `TaskMismatch`.
pub fn load_model(path: &Path, expected: Option<Task>) -> Result<MlpModel, IoError> {
    let bytes = std::fs::read(path).map_err(|e| IoError::io(path, e))?;
    let (found, model) = decode_model(&bytes)?;
    match expected {
        Some(expected) if expected != found => Err(IoError::TaskMismatch { expected, found }),
        _ => Ok(model),
    }
}

/// Task tag of an artifact file.
pub fn model_task(path: &Path) -> Result<Task, IoError> {
    let bytes = std::fs::read(path).map_err(|e| IoError::io(path, e))?;
    decode_model(&bytes).map(|(t, _)| t)
}
