//! Synthetic tablet traces and sensor windows with known ground truth, and
//! brute-force reference implementations used to cross-check the pipeline.

mod datasets;
mod session;

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::activity::Activity;
use crate::labeling::{ContactTrace, LabelError, TABLET_RATE_HZ};
use crate::signal::{linear_interpolate, SensorWindow, ACC_WINDOW_LEN, CM_WINDOW_LEN};

pub use datasets::{detection_toy, intensity_toy, ToyConfig};
pub use session::{synth_session, BlockSpec, SessionSpec, SyntheticSession};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("{freq_hz} Hz tone is at or above the {nyquist_hz} Hz Nyquist limit")]
    AliasedTone { freq_hz: f64, nyquist_hz: f64 },
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Trace(#[from] LabelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScratchStyle {
    /// Finger stays on the surface for the whole stroke cycle.
    ContinuousContact,
    /// Contact breaks part-way through each return stroke.
    LiftOff,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Trajectory {
    /// Sharp reversals; smoothing rounds them off and biases power low.
    Triangle,
    #[default]
    Sine,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum ForceProfile {
    Constant { newtons: f64 },
    Sinusoid { mean: f64, amplitude: f64, freq_hz: f64 },
}

impl ForceProfile {
    fn at(&self, t: f64) -> f64 {
        match *self {
            ForceProfile::Constant { newtons } => newtons,
            ForceProfile::Sinusoid {
                mean,
                amplitude,
                freq_hz,
            } => mean + amplitude * (2.0 * PI * freq_hz * t).sin(),
        }
    }
}

fn default_center() -> (f64, f64) {
    (120.0, 70.0)
}

fn default_phase() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticScratchSpec {
    pub style: ScratchStyle,
    #[serde(default)]
    pub trajectory: Trajectory,
    /// Peak-to-peak travel along y, mm.
    pub stroke_amplitude: f64,
    /// Full up-and-down cycle, s.
    pub stroke_period: f64,
    pub force: ForceProfile,
    pub duration: f64,
    #[serde(default)]
    pub position_noise_sd: f64,
    #[serde(default)]
    pub force_noise_sd: f64,
    /// Fraction of each period without contact (lift-off style only).
    #[serde(default)]
    pub contact_gap_fraction: f64,
    /// Time of the first peak, s.
    #[serde(default = "default_phase")]
    pub phase: f64,
    #[serde(default = "default_center")]
    pub center: (f64, f64),
    #[serde(default)]
    pub seed: u64,
}

impl SyntheticScratchSpec {
    pub fn continuous(amplitude: f64, period: f64, newtons: f64, duration: f64) -> Self {
        Self {
            style: ScratchStyle::ContinuousContact,
            trajectory: Trajectory::Sine,
            stroke_amplitude: amplitude,
            stroke_period: period,
            force: ForceProfile::Constant { newtons },
            duration,
            position_noise_sd: 0.0,
            force_noise_sd: 0.0,
            contact_gap_fraction: 0.0,
            phase: default_phase(),
            center: default_center(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::InvalidSpec(m.to_string()));
        if !(self.stroke_amplitude > 0.0 && self.stroke_period > 0.0 && self.duration > 0.0) {
            return bad("amplitude, period and duration must be positive");
        }
        if !(0.0..0.5).contains(&self.contact_gap_fraction) {
            return bad("contact_gap_fraction must lie in [0, 0.5)");
        }
        if self.position_noise_sd < 0.0 || self.force_noise_sd < 0.0 {
            return bad("noise must be non-negative");
        }
        let (cx, cy) = self.center;
        let half = self.stroke_amplitude / 2.0;
        if cy - half < 0.0 || cy + half > crate::labeling::TABLET_HEIGHT_MM || !(0.0..=240.0).contains(&cx) {
            return bad("stroke leaves the tablet");
        }
        Ok(())
    }

    /// Noise-free y at time t.
    fn y_at(&self, t: f64) -> f64 {
        let half = self.stroke_amplitude / 2.0;
        // phase in cycles, 0 at a peak
        let c = ((t - self.phase) / self.stroke_period).rem_euclid(1.0);
        let unit = match self.trajectory {
            Trajectory::Triangle => 1.0 - 4.0 * c.min(1.0 - c),
            Trajectory::Sine => (2.0 * PI * c).cos(),
        };
        self.center.1 + half * unit
    }

    /// Lift-off gap: centred in the falling (peak → valley) half-cycle, so
    /// both turning points are always observed.
    fn in_gap(&self, t: f64) -> bool {
        if self.style != ScratchStyle::LiftOff || self.contact_gap_fraction == 0.0 {
            return false;
        }
        let c = ((t - self.phase) / self.stroke_period).rem_euclid(1.0);
        (c - 0.25).abs() < self.contact_gap_fraction / 2.0
    }

    /// Chord speed between consecutive turning points, mm/s.
    pub fn stroke_speed(&self) -> f64 {
        2.0 * self.stroke_amplitude / self.stroke_period
    }
}

/// A generated trace and the power each whole second should carry.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticTrace {
    pub trace: ContactTrace,
    pub true_power: Vec<f64>,
}

/// 150 Hz tablet trace for `spec`. True power per second is the mean of the
/// noise-free force profile over the in-contact samples of that second times
/// the chord speed.
pub fn gen_contact_trace(spec: &SyntheticScratchSpec) -> Result<SyntheticTrace, SynthError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let pos_noise = Normal::new(0.0, spec.position_noise_sd).expect("sd >= 0");
    let force_noise = Normal::new(0.0, spec.force_noise_sd).expect("sd >= 0");
    let n = (spec.duration * TABLET_RATE_HZ).round() as usize;
    let (mut t, mut x, mut y, mut f) = (
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    );
    for i in 0..n {
        let ti = i as f64 / TABLET_RATE_HZ;
        t.push(ti);
        // Draw noise for every sample so both styles share a noise sequence.
        let (nx, ny, nf) = (
            pos_noise.sample(&mut rng),
            pos_noise.sample(&mut rng),
            force_noise.sample(&mut rng),
        );
        if spec.in_gap(ti) {
            x.push(f64::NAN);
            y.push(f64::NAN);
            f.push(f64::NAN);
        } else {
            x.push((spec.center.0 + nx).clamp(0.0, 240.0));
            y.push((spec.y_at(ti) + ny).clamp(0.0, crate::labeling::TABLET_HEIGHT_MM));
            f.push((spec.force.at(ti) + nf).max(0.0));
        }
    }
    let seconds = (spec.duration + 1e-9).floor() as usize;
    let speed = spec.stroke_speed();
    let true_power = (0..seconds)
        .map(|k| {
            let lo = k * TABLET_RATE_HZ as usize;
            let hi = ((k + 1) * TABLET_RATE_HZ as usize).min(n);
            let touching: Vec<f64> = (lo..hi)
                .filter(|&i| !spec.in_gap(t[i]))
                .map(|i| spec.force.at(t[i]).max(0.0))
                .collect();
            touching.iter().sum::<f64>() / touching.len() as f64 * speed
        })
        .collect();
    let trace = ContactTrace::new(0.0, spec.duration, t, x, y, f)?;
    Ok(SyntheticTrace { trace, true_power })
}

/// Per-second power from dense path integration of the gap-filled position
/// (path length / elapsed time) times the mean observed force. Uses neither
/// smoothing nor turning-point detection.
pub fn brute_force_power(trace: &ContactTrace) -> Vec<Result<f64, LabelError>> {
    let n_windows = trace.window_count(1.0);
    let filled = linear_interpolate(&trace.t, &trace.x)
        .and_then(|x| Ok((x, linear_interpolate(&trace.t, &trace.y)?)));
    (0..n_windows)
        .map(|k| {
            let start = trace.block_start_s + k as f64;
            let idx: Vec<usize> = (0..trace.len())
                .filter(|&i| trace.t[i] >= start && trace.t[i] < start + 1.0)
                .collect();
            let forces: Vec<f64> = idx.iter().map(|&i| trace.force[i]).filter(|v| !v.is_nan()).collect();
            if forces.is_empty() {
                return Err(LabelError::NoContact);
            }
            let (x, y) = filled.as_ref().map_err(|_| LabelError::NoContact)?;
            let mut path = 0.0;
            let mut elapsed = 0.0;
            for w in idx.windows(2) {
                let (a, b) = (w[0], w[1]);
                path += ((x[b] - x[a]).powi(2) + (y[b] - y[a]).powi(2)).sqrt();
                elapsed += trace.t[b] - trace.t[a];
            }
            let speed = if elapsed > 0.0 { path / elapsed } else { 0.0 };
            let mean_force = forces.iter().sum::<f64>() / forces.len() as f64;
            Ok(mean_force * speed)
        })
        .collect()
}

/// O(N²) DFT straight from the definition. Twiddles come from a table of
/// the N roots of unity, indexed by (k·j) mod N.
pub fn naive_dft(signal: &[f64]) -> Vec<Complex64> {
    let n = signal.len();
    let roots: Vec<Complex64> = (0..n)
        .map(|m| {
            let angle = -2.0 * PI * m as f64 / n as f64;
            Complex64::new(angle.cos(), angle.sin())
        })
        .collect();
    (0..n)
        .map(|k| {
            let mut acc = Complex64::new(0.0, 0.0);
            let mut idx = 0;
            for &g in signal {
                acc += roots[idx] * g;
                idx += k;
                if idx >= n {
                    idx %= n;
                }
            }
            acc
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct WindowSpec {
    /// (frequency Hz, amplitude) pairs for the contact microphone.
    pub cm_tones: Vec<(f64, f64)>,
    pub acc_tones: Vec<(f64, f64)>,
    pub noise_sd: f64,
    pub seed: u64,
}

/// Tone sums on both channels plus seeded Gaussian noise.
pub fn gen_sensor_window(spec: &WindowSpec) -> Result<SensorWindow, SynthError> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let cm = tone_sum(&spec.cm_tones, 8000.0, CM_WINDOW_LEN, 0.0, spec.noise_sd, &mut rng)?;
    let acc = tone_sum(&spec.acc_tones, 400.0, ACC_WINDOW_LEN, 0.0, spec.noise_sd, &mut rng)?;
    SensorWindow::new(cm, acc, 0.0, "", Activity::Unspecified)
        .map_err(|e| SynthError::InvalidSpec(e.to_string()))
}

pub(crate) fn tone_sum(
    tones: &[(f64, f64)],
    rate: f64,
    n: usize,
    start_s: f64,
    noise_sd: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>, SynthError> {
    let nyquist = rate / 2.0;
    if let Some(&(freq_hz, _)) = tones.iter().find(|(f, _)| *f >= nyquist || *f < 0.0) {
        return Err(SynthError::AliasedTone {
            freq_hz,
            nyquist_hz: nyquist,
        });
    }
    let noise = Normal::new(0.0, noise_sd.max(0.0)).expect("sd >= 0");
    Ok((0..n)
        .map(|i| {
            let t = start_s + i as f64 / rate;
            let clean: f64 = tones.iter().map(|(f, a)| a * (2.0 * PI * f * t).sin()).sum();
            if noise_sd > 0.0 {
                clean + noise.sample(rng)
            } else {
                clean
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labeling::{label_block, LabelConfig};
    use crate::spectral::{extract_features, Task};

    #[test]
    fn noiseless_truth() {
        let s = gen_contact_trace(&SyntheticScratchSpec::continuous(40.0, 0.5, 1.0, 10.0)).unwrap();
        assert_eq!(s.true_power.len(), 10);
        assert!(s.true_power.iter().all(|p| (p - 160.0).abs() < 1e-9));
        let z = gen_contact_trace(&SyntheticScratchSpec::continuous(40.0, 0.5, 0.0, 3.0)).unwrap();
        assert!(z.true_power.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn lift_off_shares_truth_and_has_gaps() {
        let cont = SyntheticScratchSpec::continuous(40.0, 0.5, 1.0, 5.0);
        let lift = SyntheticScratchSpec {
            style: ScratchStyle::LiftOff,
            contact_gap_fraction: 0.3,
            ..cont.clone()
        };
        let a = gen_contact_trace(&cont).unwrap();
        let b = gen_contact_trace(&lift).unwrap();
        assert_eq!(a.true_power, b.true_power);
        assert!(b.trace.y.iter().any(|v| v.is_nan()));
        assert!(!a.trace.y.iter().any(|v| v.is_nan()));
    }

    #[test]
    fn lift_off_truth_uses_contact_samples_only() {
        // force oscillates near the stroke rate, so the gaps see a biased phase
        let spec = SyntheticScratchSpec {
            style: ScratchStyle::LiftOff,
            contact_gap_fraction: 0.28,
            force: ForceProfile::Sinusoid {
                mean: 0.66,
                amplitude: 0.3,
                freq_hz: 1.83,
            },
            ..SyntheticScratchSpec::continuous(26.0, 0.528, 1.0, 10.0)
        };
        let cont = SyntheticScratchSpec {
            style: ScratchStyle::ContinuousContact,
            contact_gap_fraction: 0.0,
            ..spec.clone()
        };
        let lift = gen_contact_trace(&spec).unwrap();
        let whole = gen_contact_trace(&cont).unwrap();
        assert!(lift.true_power.iter().zip(&whole.true_power).any(|(a, b)| (a - b).abs() > 0.05 * b));
        for (l, truth) in label_block(&lift.trace, &LabelConfig::default()).iter().zip(&lift.true_power) {
            assert!((l.power - truth).abs() < 0.02 * truth, "{} vs {truth}", l.power);
        }
    }

    #[test]
    fn generators_are_seed_deterministic() {
        let spec = SyntheticScratchSpec {
            position_noise_sd: 0.5,
            force_noise_sd: 0.05,
            seed: 9,
            ..SyntheticScratchSpec::continuous(40.0, 0.5, 1.0, 3.0)
        };
        let a = gen_contact_trace(&spec).unwrap();
        let b = gen_contact_trace(&spec).unwrap();
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a.trace.y), bits(&b.trace.y));
        let w = WindowSpec {
            cm_tones: vec![(50.0, 1.0)],
            acc_tones: vec![],
            noise_sd: 0.1,
            seed: 4,
        };
        assert_eq!(gen_sensor_window(&w).unwrap(), gen_sensor_window(&w).unwrap());
    }

    #[test]
    fn brute_force_matches_straight_line() {
        // Constant 100 mm/s along x, 2 N.
        let n = 300;
        let t: Vec<f64> = (0..n).map(|i| i as f64 / 150.0).collect();
        let x: Vec<f64> = t.iter().map(|t| 10.0 + 100.0 * t).collect();
        let trace = ContactTrace::new(0.0, 2.0, t, x, vec![50.0; n], vec![2.0; n]).unwrap();
        for p in brute_force_power(&trace) {
            assert!((p.unwrap() - 200.0).abs() < 1e-9);
        }
    }

    #[test]
    fn pipeline_and_dense_oracle_agree_on_smooth_traces() {
        for trajectory in [Trajectory::Triangle, Trajectory::Sine] {
            let spec = SyntheticScratchSpec {
                trajectory,
                ..SyntheticScratchSpec::continuous(30.0, 0.6, 1.2, 6.0)
            };
            let s = gen_contact_trace(&spec).unwrap();
            let labels = label_block(&s.trace, &LabelConfig::default());
            let dense = brute_force_power(&s.trace);
            for (l, d) in labels.iter().zip(&dense) {
                let d = *d.as_ref().unwrap();
                assert!(l.is_valid());
                assert!((l.power - d).abs() <= 0.1 * d, "{trajectory:?}: {} vs {d}", l.power);
            }
        }
    }

    #[test]
    fn sensor_window_examples() {
        let w = gen_sensor_window(&WindowSpec {
            cm_tones: vec![(50.0, 3.0)],
            ..Default::default()
        })
        .unwrap();
        let f = extract_features(&w, Task::Intensity);
        assert!((f.values[50] - 3.0).abs() < 1e-9);

        let zero = gen_sensor_window(&WindowSpec::default()).unwrap();
        assert!(zero.cm().iter().chain(zero.acc_z()).all(|&v| v == 0.0));

        let aliased = gen_sensor_window(&WindowSpec {
            acc_tones: vec![(250.0, 1.0)],
            ..Default::default()
        });
        assert!(matches!(aliased, Err(SynthError::AliasedTone { .. })));
    }

    #[test]
    fn spec_validation() {
        let mut s = SyntheticScratchSpec::continuous(40.0, 0.5, 1.0, 1.0);
        s.contact_gap_fraction = 0.5;
        assert!(gen_contact_trace(&s).is_err());
        let s = SyntheticScratchSpec::continuous(200.0, 0.5, 1.0, 1.0);
        assert!(gen_contact_trace(&s).is_err());
    }
}
