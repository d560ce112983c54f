//! Whole synthetic recording sessions, as accepted by the CLI `synth` command.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{gen_contact_trace, tone_sum, SynthError, SyntheticScratchSpec};
use crate::activity::Activity;
use crate::io::{Annotation, Session, SessionKind, SessionManifest, Streams, TabletStream};
use crate::labeling::TABLET_RATE_HZ;
use crate::signal::{Channel, TimeSeries};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockSpec {
    pub activity: Activity,
    pub duration_s: f64,
    /// Tablet trace for this block, if any.
    #[serde(default)]
    pub scratch: Option<SyntheticScratchSpec>,
    #[serde(default)]
    pub cm_tones: Vec<(f64, f64)>,
    #[serde(default)]
    pub acc_tones: Vec<(f64, f64)>,
    #[serde(default)]
    pub noise_sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionSpec {
    pub participant_id: String,
    pub session_kind: SessionKind,
    pub blocks: Vec<BlockSpec>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSession {
    pub session: Session,
    /// (window start, power) for every whole second of every scratch block.
    pub true_power: Vec<(f64, f64)>,
}

/// Blocks are laid end to end from t = 0. Sensor samples sit on the
/// nominal grid of each channel; the block's scratch trace, when present,
/// is shifted to the block start.
pub fn synth_session(spec: &SessionSpec) -> Result<SyntheticSession, SynthError> {
    if spec.blocks.is_empty() {
        return Err(SynthError::InvalidSpec("session has no blocks".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (mut cm, mut acc) = (Vec::new(), Vec::new());
    let mut tablet = TabletStream::default();
    let mut annotations = Vec::new();
    let mut true_power = Vec::new();
    let mut start = 0.0;
    for b in &spec.blocks {
        let cm_n = (b.duration_s * 8000.0).round() as usize;
        let acc_n = (b.duration_s * 400.0).round() as usize;
        if cm_n == 0 || (cm_n as f64 - b.duration_s * 8000.0).abs() > 1e-6 {
            return Err(SynthError::InvalidSpec(format!(
                "block duration {} s must be a positive multiple of 1/400 s",
                b.duration_s
            )));
        }
        cm.extend(tone_sum(&b.cm_tones, 8000.0, cm_n, start, b.noise_sd, &mut rng)?);
        acc.extend(tone_sum(&b.acc_tones, 400.0, acc_n, start, b.noise_sd, &mut rng)?);
        if let Some(s) = &b.scratch {
            let s = SyntheticScratchSpec {
                duration: b.duration_s,
                ..s.clone()
            };
            let g = gen_contact_trace(&s)?;
            let offset = (start * TABLET_RATE_HZ).round() / TABLET_RATE_HZ;
            tablet.t.extend(g.trace.t.iter().map(|t| t + offset));
            tablet.x.extend(g.trace.x);
            tablet.y.extend(g.trace.y);
            tablet.force.extend(g.trace.force);
            true_power.extend(g.true_power.iter().enumerate().map(|(k, &p)| (start + k as f64, p)));
        }
        annotations.push(Annotation {
            start_s: start,
            end_s: start + b.duration_s,
            activity: b.activity,
        });
        start += b.duration_s;
    }
    let has_tablet = !tablet.t.is_empty();
    Ok(SyntheticSession {
        session: Session {
            manifest: SessionManifest {
                schema_version: crate::io::SCHEMA_VERSION,
                participant_id: spec.participant_id.clone(),
                session_kind: spec.session_kind,
                streams: Streams {
                    contact_mic: "cm.csv".into(),
                    accel_z: "acc.csv".into(),
                    tablet: has_tablet.then(|| "tablet.csv".into()),
                },
                annotations,
            },
            cm: TimeSeries::uniform(Channel::ContactMic, 0.0, cm),
            acc: TimeSeries::uniform(Channel::AccelZ, 0.0, acc),
            tablet: has_tablet.then_some(tablet),
        },
        true_power,
    })
}
