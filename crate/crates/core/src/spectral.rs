//! Frequency-domain features from sensor windows.
//!
//! The transform is the unnormalized forward DFT, `d_k = Σ g_n e^{-2πikn/N}`.
//! Amplitudes are `2/N · |d_k|` for every retained bin, DC included. With
//! 1-s windows bin `k` is `k` Hz.

use std::ops::Range;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::signal::{SensorWindow, ACC_WINDOW_LEN, CM_WINDOW_LEN};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("expected {expected} samples, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("cannot fit a scaler on an empty training set")]
    EmptyTrainingSet,
    #[error("feature vector has {actual} dimensions, scaler expects {expected}")]
    DimensionMismatch { expected: usize, actual: usize },
}

pub fn dft(signal: &[f64]) -> Vec<Complex64> {
    if signal.is_empty() {
        return Vec::new();
    }
    let fft = FftPlanner::new().plan_fft_forward(signal.len());
    transform(fft.as_ref(), signal)
}

/// Inverse of [`dft`] including the 1/N factor.
pub fn inverse_dft(spectrum: &[Complex64]) -> Vec<Complex64> {
    if spectrum.is_empty() {
        return Vec::new();
    }
    let n = spectrum.len();
    let fft = FftPlanner::new().plan_fft_inverse(n);
    let mut buf = spectrum.to_vec();
    fft.process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.iter_mut().for_each(|c| *c *= scale);
    buf
}

fn transform(fft: &dyn Fft<f64>, signal: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = signal.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft.process(&mut buf);
    buf
}

/// Single-sided amplitudes `2/N · |d_k|` for `k = 0..=N/2`.
pub fn single_sided_amplitude(signal: &[f64], expected_len: usize) -> Result<Vec<f64>, SpectralError> {
    if signal.len() != expected_len {
        return Err(SpectralError::LengthMismatch {
            expected: expected_len,
            actual: signal.len(),
        });
    }
    Ok(amplitudes(&dft(signal), expected_len))
}

fn amplitudes(spectrum: &[Complex64], n: usize) -> Vec<f64> {
    let scale = 2.0 / n as f64;
    spectrum[..n / 2 + 1].iter().map(|c| scale * c.norm()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Intensity,
    Detection,
}

impl Task {
    /// Contact-microphone bins kept (0 Hz upward).
    pub fn cm_bins(self) -> usize {
        match self {
            Task::Intensity => 400,
            Task::Detection => 275,
        }
    }

    pub fn acc_bins(self) -> usize {
        match self {
            Task::Intensity => 175,
            Task::Detection => 200,
        }
    }

    pub fn dims(self) -> usize {
        self.cm_bins() + self.acc_bins()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Intensity => "intensity",
            Task::Detection => "detection",
        }
    }
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "intensity" => Ok(Task::Intensity),
            "detection" => Ok(Task::Detection),
            other => Err(format!("unknown task '{other}'")),
        }
    }
}

/// Which sensor blocks of a feature vector a model sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureBlocks {
    #[default]
    Both,
    CmOnly,
    AccelOnly,
}

impl FeatureBlocks {
    pub const ALL: [FeatureBlocks; 3] = [FeatureBlocks::Both, FeatureBlocks::CmOnly, FeatureBlocks::AccelOnly];

    pub fn columns(self, task: Task) -> Range<usize> {
        match self {
            FeatureBlocks::Both => 0..task.dims(),
            FeatureBlocks::CmOnly => 0..task.cm_bins(),
            FeatureBlocks::AccelOnly => task.cm_bins()..task.dims(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureBlocks::Both => "both",
            FeatureBlocks::CmOnly => "cm-only",
            FeatureBlocks::AccelOnly => "accel-only",
        }
    }
}

impl std::str::FromStr for FeatureBlocks {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "both" => Ok(FeatureBlocks::Both),
            "cm-only" => Ok(FeatureBlocks::CmOnly),
            "accel-only" => Ok(FeatureBlocks::AccelOnly),
            other => Err(format!("unknown ablation '{other}'")),
        }
    }
}

/// Contact-microphone amplitudes followed by accelerometer amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub task: Task,
    pub values: Vec<f64>,
}

/// Feature extractor with transforms planned once for both window lengths.
#[derive(Clone)]
pub struct FeatureExtractor {
    cm_fft: Arc<dyn Fft<f64>>,
    acc_fft: Arc<dyn Fft<f64>>,
}

impl Default for FeatureExtractor {
    fn default() -> Self {
        Self::new()
    }
}

impl FeatureExtractor {
    pub fn new() -> Self {
        let mut planner = FftPlanner::new();
        Self {
            cm_fft: planner.plan_fft_forward(CM_WINDOW_LEN),
            acc_fft: planner.plan_fft_forward(ACC_WINDOW_LEN),
        }
    }

    pub fn extract(&self, window: &SensorWindow, task: Task) -> FeatureVector {
        let cm = amplitudes(&transform(self.cm_fft.as_ref(), window.cm()), CM_WINDOW_LEN);
        let acc = amplitudes(&transform(self.acc_fft.as_ref(), window.acc_z()), ACC_WINDOW_LEN);
        let mut values = Vec::with_capacity(task.dims());
        values.extend_from_slice(&cm[..task.cm_bins()]);
        values.extend_from_slice(&acc[..task.acc_bins()]);
        FeatureVector { task, values }
    }
}

pub fn extract_features(window: &SensorWindow, task: Task) -> FeatureVector {
    FeatureExtractor::new().extract(window, task)
}

/// Per-dimension min-max scaling fitted on training rows. Constant
/// dimensions map to 0; values outside the fitted range are not clamped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, SpectralError> {
        let first = rows.first().ok_or(SpectralError::EmptyTrainingSet)?.as_ref();
        let mut min = first.to_vec();
        let mut max = first.to_vec();
        for row in &rows[1..] {
            let row = row.as_ref();
            if row.len() != min.len() {
                return Err(SpectralError::DimensionMismatch {
                    expected: min.len(),
                    actual: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
        Ok(Self { min, max })
    }

    pub fn dims(&self) -> usize {
        self.min.len()
    }

    pub fn transform(&self, row: &[f64]) -> Result<Vec<f64>, SpectralError> {
        if row.len() != self.dims() {
            return Err(SpectralError::DimensionMismatch {
                expected: self.dims(),
                actual: row.len(),
            });
        }
        Ok(row
            .iter()
            .zip(self.min.iter().zip(&self.max))
            .map(|(&v, (&lo, &hi))| if hi > lo { (v - lo) / (hi - lo) } else { 0.0 })
            .collect())
    }

    pub fn transform_all<R: AsRef<[f64]>>(&self, rows: &[R]) -> Result<Vec<Vec<f64>>, SpectralError> {
        rows.iter().map(|r| self.transform(r.as_ref())).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::naive_dft;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn tone(freq: f64, amp: f64, rate: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| amp * (2.0 * PI * freq * i as f64 / rate).sin())
            .collect()
    }

    #[test]
    fn impulse_and_constant() {
        let mut imp = vec![0.0; 16];
        imp[0] = 1.0;
        for c in dft(&imp) {
            assert!((c - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
        let d = dft(&[2.5; 10]);
        assert!((d[0] - Complex64::new(25.0, 0.0)).norm() < 1e-12);
        assert!(d[1..].iter().all(|c| c.norm() < 1e-12));
    }

    #[test]
    fn fast_matches_naive() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [1usize, 7, 400, 512] {
            let g: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let fast = dft(&g);
            let slow = naive_dft(&g);
            let err = fast
                .iter()
                .zip(&slow)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            assert!(err < 1e-9 * n as f64, "n={n} err={err}");
        }
    }

    #[test]
    fn amplitude_examples() {
        let s = tone(50.0, 3.0, 8000.0, 8000);
        let a = single_sided_amplitude(&s, 8000).unwrap();
        assert_eq!(a.len(), 4001);
        assert!((a[50] - 3.0).abs() < 1e-9);
        assert!(a.iter().enumerate().all(|(k, v)| k == 50 || v.abs() < 1e-9));

        let c = single_sided_amplitude(&[0.7; 8000], 8000).unwrap();
        assert!((c[0] - 1.4).abs() < 1e-12);

        let two: Vec<f64> = tone(30.0, 1.5, 8000.0, 8000)
            .iter()
            .zip(tone(120.0, 0.25, 8000.0, 8000))
            .map(|(a, b)| a + b)
            .collect();
        let a = single_sided_amplitude(&two, 8000).unwrap();
        assert!((a[30] - 1.5).abs() < 1e-9);
        assert!((a[120] - 0.25).abs() < 1e-9);

        assert_eq!(
            single_sided_amplitude(&[0.0; 399], 400),
            Err(SpectralError::LengthMismatch {
                expected: 400,
                actual: 399
            })
        );
    }

    #[test]
    fn feature_lengths_and_layout() {
        let zero = SensorWindow::zeros(0.0);
        let fi = extract_features(&zero, Task::Intensity);
        assert_eq!(fi.values.len(), 575);
        assert!(fi.values.iter().all(|&v| v == 0.0));
        assert_eq!(extract_features(&zero, Task::Detection).values.len(), 475);

        let w = SensorWindow::new(
            tone(50.0, 3.0, 8000.0, 8000),
            tone(100.0, 0.5, 400.0, 400),
            0.0,
            "p",
            Default::default(),
        )
        .unwrap();
        let f = extract_features(&w, Task::Intensity);
        assert!((f.values[50] - 3.0).abs() < 1e-9);
        assert!((f.values[400 + 100] - 0.5).abs() < 1e-9);
        let f = extract_features(&w, Task::Detection);
        assert!((f.values[275 + 100] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn ablation_columns() {
        assert_eq!(FeatureBlocks::CmOnly.columns(Task::Intensity), 0..400);
        assert_eq!(FeatureBlocks::AccelOnly.columns(Task::Intensity), 400..575);
        assert_eq!(FeatureBlocks::AccelOnly.columns(Task::Detection), 275..475);
    }

    #[test]
    fn scaler_examples() {
        let s = MinMaxScaler::fit(&[vec![0.0], vec![10.0]]).unwrap();
        assert_eq!(s.transform(&[5.0]).unwrap(), vec![0.5]);
        assert_eq!(s.transform(&[0.0]).unwrap(), vec![0.0]);
        assert_eq!(s.transform(&[10.0]).unwrap(), vec![1.0]);
        assert_eq!(s.transform(&[12.0]).unwrap(), vec![1.2]);
        let constant = MinMaxScaler::fit(&[vec![3.0, 1.0], vec![3.0, 2.0]]).unwrap();
        assert_eq!(constant.transform(&[7.0, 2.0]).unwrap(), vec![0.0, 1.0]);
        assert_eq!(
            MinMaxScaler::fit::<Vec<f64>>(&[]),
            Err(SpectralError::EmptyTrainingSet)
        );
    }

    proptest! {
        #[test]
        fn parseval_and_round_trip(g in proptest::collection::vec(-100.0f64..100.0, 1..300)) {
            let d = dft(&g);
            let energy: f64 = g.iter().map(|v| v * v).sum();
            let spec: f64 = d.iter().map(|c| c.norm_sqr()).sum::<f64>() / g.len() as f64;
            prop_assert!((energy - spec).abs() <= 1e-9 * energy.max(1e-12));
            let back = inverse_dft(&d);
            let scale = g.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            for (b, v) in back.iter().zip(&g) {
                prop_assert!((b.re - v).abs() <= 1e-9 * scale);
                prop_assert!(b.im.abs() <= 1e-9 * scale);
            }
        }

        #[test]
        fn scaler_maps_training_rows_into_unit_box(
            rows in proptest::collection::vec(proptest::collection::vec(-1e3f64..1e3, 4), 1..20)
        ) {
            let s = MinMaxScaler::fit(&rows).unwrap();
            for r in s.transform_all(&rows).unwrap() {
                prop_assert!(r.iter().all(|v| (0.0..=1.0).contains(v)));
            }
        }
    }
}
