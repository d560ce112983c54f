//! Glue between loaded sessions and the labeling, feature and model stages.

use rayon::prelude::*;
use thiserror::Error;

use crate::activity::{Activity, Surface};
use crate::dataset::{FeatureTable, Sample};
use crate::io::{LabelRecord, Session};
use crate::labeling::{label_block, LabelConfig, LabelError};
use crate::mlp::{train, MlpConfig, MlpError, MlpModel};
use crate::signal::{window_range, SignalError, WindowConfig};
use crate::spectral::{FeatureBlocks, FeatureExtractor, MinMaxScaler, SpectralError, Task};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error("session for '{0}' has no tablet stream to label")]
    NoTablet(String),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Label(#[from] LabelError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Mlp(#[from] MlpError),
    #[error("no labeled rows to train on")]
    NoTrainingRows,
    #[error("model input width {width} matches no feature block of the {task} task")]
    UnknownWidth { task: Task, width: usize },
}

/// Annotated blocks, or the whole `[start, end)` span when there are none.
fn blocks(session: &Session, start: f64, end: f64) -> Vec<(f64, f64, Activity)> {
    if session.manifest.annotations.is_empty() {
        vec![(start, end, Activity::Unspecified)]
    } else {
        let mut b: Vec<_> = session
            .manifest
            .annotations
            .iter()
            .map(|a| (a.start_s, a.end_s, a.activity))
            .collect();
        b.sort_by(|x, y| x.0.total_cmp(&y.0));
        b
    }
}

/// Power labels for every annotated block of the tablet stream. Skin-set
/// blocks happen off the tablet and get no labels.
pub fn label_session(session: &Session, config: &LabelConfig) -> Result<Vec<LabelRecord>, PipelineError> {
    let pid = &session.manifest.participant_id;
    let tablet = session
        .tablet
        .as_ref()
        .ok_or_else(|| PipelineError::NoTablet(pid.clone()))?;
    let (Some(&first), Some(&last)) = (tablet.t.first(), tablet.t.last()) else {
        return Ok(Vec::new());
    };
    let mut out = Vec::new();
    for (start, end, activity) in blocks(session, first, last + 1.0 / 150.0) {
        if matches!(activity, Activity::Instructed { surface: Surface::Skin, .. }) {
            continue;
        }
        let trace = tablet.block(start, end - start)?;
        out.extend(label_block(&trace, config).into_iter().map(|label| LabelRecord {
            participant: pid.clone(),
            activity: Some(activity),
            label,
        }));
    }
    Ok(out)
}

enum Join {
    Target(f64),
    Unlabeled,
    Rejected,
}

fn join_label(labels: &[&LabelRecord], midpoint: f64, window_s: f64) -> Join {
    // labels are sorted by window start
    let i = labels.partition_point(|l| l.label.window_start <= midpoint);
    match i.checked_sub(1).map(|i| labels[i]) {
        Some(l) if midpoint < l.label.window_start + window_s => {
            if l.label.is_valid() {
                Join::Target(l.label.power)
            } else {
                Join::Rejected
            }
        }
        _ => Join::Unlabeled,
    }
}

/// Sliding-window features for one session.
///
/// Detection rows take their target from the annotation. Intensity rows are
/// joined to the label whose window contains the sensor window's midpoint;
/// rows joined to a rejected label are dropped and rows with no label keep
/// an empty target. Without `labels`, sessions with a tablet are labeled on
/// the fly.
pub fn featurize_session(
    session: &Session,
    task: Task,
    labels: Option<&[LabelRecord]>,
    window: &WindowConfig,
    label_config: &LabelConfig,
) -> Result<FeatureTable, PipelineError> {
    let pid = &session.manifest.participant_id;
    let computed;
    let labels: Option<&[LabelRecord]> = match (task, labels, &session.tablet) {
        (Task::Intensity, None, Some(_)) => {
            computed = label_session(session, label_config)?;
            Some(&computed)
        }
        (Task::Intensity, l, _) => l,
        (Task::Detection, _, _) => None,
    };
    let mut own: Vec<&LabelRecord> = labels
        .unwrap_or_default()
        .iter()
        .filter(|l| &l.participant == pid)
        .collect();
    own.sort_by(|a, b| a.label.window_start.total_cmp(&b.label.window_start));

    let (cm_start, cm_end) = session.cm.span().ok_or(SignalError::AllMissing)?;
    let (acc_start, acc_end) = session.acc.span().ok_or(SignalError::AllMissing)?;
    let extractor = FeatureExtractor::new();
    let mut table = FeatureTable::new(task);
    for (start, end, activity) in blocks(session, cm_start.max(acc_start), cm_end.min(acc_end)) {
        let windows = match window_range(&session.cm, &session.acc, start, end, window) {
            Ok(w) => w,
            Err(SignalError::DurationTooShort { .. }) => continue,
            Err(e) => return Err(e.into()),
        };
        let rows: Vec<Option<Sample>> = windows
            .par_iter()
            .map(|w| {
                let target = match task {
                    Task::Detection => activity.scratch_target().map(|s| if s { 1.0 } else { 0.0 }),
                    Task::Intensity => match join_label(&own, w.midpoint(), label_config.window_s) {
                        Join::Target(p) => Some(p),
                        Join::Unlabeled => None,
                        Join::Rejected => return None,
                    },
                };
                Some(Sample {
                    participant: pid.clone(),
                    activity,
                    window_start: w.start_time,
                    target,
                    features: extractor.extract(w, task).values,
                })
            })
            .collect();
        table.samples.extend(rows.into_iter().flatten());
    }
    Ok(table)
}

/// Feature block a model was trained on, from its input width.
pub fn blocks_for_width(task: Task, width: usize) -> Result<FeatureBlocks, PipelineError> {
    FeatureBlocks::ALL
        .into_iter()
        .find(|b| b.columns(task).len() == width)
        .ok_or(PipelineError::UnknownWidth { task, width })
}

fn select(table: &FeatureTable, blocks: FeatureBlocks) -> Vec<Vec<f64>> {
    let cols = blocks.columns(table.task);
    table
        .samples
        .iter()
        .map(|s| s.features[cols.clone()].to_vec())
        .collect()
}

/// Fits a scaler on the labeled rows, trains, and stores the scaler with
/// the model.
pub fn train_model(table: &FeatureTable, blocks: FeatureBlocks, config: &MlpConfig) -> Result<MlpModel, PipelineError> {
    let labeled = table.labeled();
    if labeled.is_empty() {
        return Err(PipelineError::NoTrainingRows);
    }
    let rows = select(&labeled, blocks);
    let scaler = MinMaxScaler::fit(&rows)?;
    let xs = scaler.transform_all(&rows)?;
    let ys: Vec<f64> = labeled.samples.iter().filter_map(|s| s.target).collect();
    let config = config.clone().with_input_size(blocks.columns(table.task).len());
    let mut model = train(&config, &xs, &ys, None)?;
    model.scaler = Some(scaler);
    Ok(model)
}

/// Model outputs for every row, scaling with the stored scaler if any.
pub fn predict_table(model: &MlpModel, table: &FeatureTable) -> Result<Vec<f64>, PipelineError> {
    let blocks = blocks_for_width(table.task, model.input_size())?;
    let rows = select(table, blocks);
    let xs = match &model.scaler {
        Some(s) => s.transform_all(&rows)?,
        None => rows,
    };
    Ok(model.predict_batch(&xs)?)
}
