//! Small synthetic feature tables for end-to-end checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{tone_sum, SynthError};
use crate::activity::{Activity, Interaction, Level, ScratchLocation};
use crate::dataset::{FeatureTable, Sample};
use crate::signal::{SensorWindow, ACC_WINDOW_LEN, CM_WINDOW_LEN};
use crate::spectral::{FeatureExtractor, Task};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToyConfig {
    pub participants: usize,
    pub windows_per_participant: usize,
    pub noise_sd: f64,
    pub seed: u64,
}

impl Default for ToyConfig {
    fn default() -> Self {
        Self {
            participants: 4,
            windows_per_participant: 40,
            noise_sd: 0.2,
            seed: 7,
        }
    }
}

fn participant_id(p: usize) -> String {
    format!("S{:02}", p + 1)
}

fn window(
    cm_tones: &[(f64, f64)],
    acc_tones: &[(f64, f64)],
    start: f64,
    noise_sd: f64,
    rng: &mut ChaCha8Rng,
) -> Result<SensorWindow, SynthError> {
    let cm = tone_sum(cm_tones, 8000.0, CM_WINDOW_LEN, start, noise_sd, rng)?;
    let acc = tone_sum(acc_tones, 400.0, ACC_WINDOW_LEN, start, noise_sd, rng)?;
    SensorWindow::new(cm, acc, start, "", Activity::Unspecified)
        .map_err(|e| SynthError::InvalidSpec(e.to_string()))
}

/// Alternating scratch / non-scratch windows. Scratch windows carry a 150 Hz
/// and 310 Hz microphone tone and a 25 Hz accelerometer tone; the others a
/// 60 Hz microphone tone and a 90 Hz accelerometer tone. Amplitudes vary per
/// participant and per window.
pub fn detection_toy(cfg: &ToyConfig) -> Result<FeatureTable, SynthError> {
    let extractor = FeatureExtractor::new();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut table = FeatureTable::new(Task::Detection);
    for p in 0..cfg.participants {
        let gain = rng.random_range(0.7..1.3);
        for k in 0..cfg.windows_per_participant {
            let a = gain * rng.random_range(0.8..1.2);
            let scratch = k % 2 == 0;
            let start = k as f64 * 0.25;
            let (activity, w) = if scratch {
                let loc = ScratchLocation::ALL[(k / 2) % ScratchLocation::ALL.len()];
                let w = window(&[(150.0, a), (310.0, a / 2.0)], &[(25.0, a)], start, cfg.noise_sd, &mut rng)?;
                (Activity::Scratch(loc), w)
            } else {
                let i = Interaction::ALL[(k / 2) % Interaction::ALL.len()];
                let w = window(&[(60.0, a)], &[(90.0, a)], start, cfg.noise_sd, &mut rng)?;
                (Activity::NonScratch(i), w)
            };
            table.samples.push(Sample {
                participant: participant_id(p),
                activity,
                window_start: start,
                target: Some(if scratch { 1.0 } else { 0.0 }),
                features: extractor.extract(&w, Task::Detection).values,
            });
        }
    }
    Ok(table)
}

/// Power drawn uniformly from 20-500 mW; a 200 Hz microphone tone has
/// amplitude power / 100 and a 40 Hz accelerometer tone power / 200.
pub fn intensity_toy(cfg: &ToyConfig) -> Result<FeatureTable, SynthError> {
    let extractor = FeatureExtractor::new();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut table = FeatureTable::new(Task::Intensity);
    let combos: Vec<Activity> = Level::ALL
        .iter()
        .flat_map(|&force| Level::ALL.iter().map(move |&speed| Activity::Combo { force, speed }))
        .collect();
    for p in 0..cfg.participants {
        for k in 0..cfg.windows_per_participant {
            let power: f64 = rng.random_range(20.0..500.0);
            let start = k as f64 * 0.25;
            let w = window(
                &[(200.0, power / 100.0)],
                &[(40.0, power / 200.0)],
                start,
                cfg.noise_sd,
                &mut rng,
            )?;
            table.samples.push(Sample {
                participant: participant_id(p),
                activity: combos[k % combos.len()],
                window_start: start,
                target: Some(power),
                features: extractor.extract(&w, Task::Intensity).values,
            });
        }
    }
    Ok(table)
}
