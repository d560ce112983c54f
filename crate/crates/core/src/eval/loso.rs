//! Leave-one-subject-out cross-validation.
//!
//! Each fold fits its own scaler and model on every participant but one and
//! scores the held-out participant. Aggregates are means over folds.

use std::collections::BTreeMap;

use rayon::prelude::*;

use super::metrics::{accuracy, mae, mape, mean_std, NaiveBaseline};
use super::EvalError;
use crate::activity::Activity;
use crate::dataset::FeatureTable;
use crate::mlp::{train, MlpConfig};
use crate::spectral::{FeatureBlocks, MinMaxScaler, Task};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub held_out: String,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// One fold per participant, in participant-id order.
pub fn loso_split(table: &FeatureTable) -> Result<Vec<Fold>, EvalError> {
    let participants = table.participants();
    if participants.len() < 2 {
        return Err(EvalError::SingleParticipant);
    }
    Ok(participants
        .into_iter()
        .map(|p| {
            let (test, train): (Vec<usize>, Vec<usize>) =
                (0..table.samples.len()).partition(|&i| table.samples[i].participant == p);
            Fold {
                held_out: p,
                train,
                test,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LosoConfig {
    pub mlp: MlpConfig,
    pub blocks: FeatureBlocks,
    /// Worker threads for folds; 0 uses rayon's default.
    pub jobs: usize,
}

impl LosoConfig {
    pub fn preset(task: Task) -> Self {
        Self {
            mlp: match task {
                Task::Intensity => MlpConfig::intensity(),
                Task::Detection => MlpConfig::detection(),
            },
            blocks: FeatureBlocks::Both,
            jobs: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    /// Row index into the evaluated table.
    pub index: usize,
    pub target: f64,
    pub predicted: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActivityAccuracy {
    pub activity: Activity,
    pub correct: usize,
    pub total: usize,
}

impl ActivityAccuracy {
    pub fn percent(&self) -> f64 {
        100.0 * self.correct as f64 / self.total as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldReport {
    pub held_out: String,
    pub n_train: usize,
    pub n_test: usize,
    /// Intensity only.
    pub mae: Option<f64>,
    pub mape: Option<f64>,
    pub naive_mae: Option<f64>,
    /// Detection only, percent.
    pub accuracy: Option<f64>,
    pub per_activity: Vec<ActivityAccuracy>,
    pub predictions: Vec<Prediction>,
    pub final_train_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LosoReport {
    pub task: Task,
    pub blocks: FeatureBlocks,
    pub folds: Vec<FoldReport>,
}

impl LosoReport {
    fn summary(&self, pick: impl Fn(&FoldReport) -> Option<f64>) -> Option<(f64, f64)> {
        let v: Vec<f64> = self.folds.iter().filter_map(pick).collect();
        (!v.is_empty()).then(|| mean_std(&v))
    }

    pub fn mae(&self) -> Option<(f64, f64)> {
        self.summary(|f| f.mae)
    }

    pub fn mape(&self) -> Option<(f64, f64)> {
        self.summary(|f| f.mape)
    }

    pub fn naive_mae(&self) -> Option<(f64, f64)> {
        self.summary(|f| f.naive_mae)
    }

    pub fn accuracy(&self) -> Option<(f64, f64)> {
        self.summary(|f| f.accuracy)
    }

    /// Per-activity accuracy averaged over the folds in which it occurs.
    pub fn activity_accuracy(&self) -> Vec<(Activity, f64)> {
        let mut acc: BTreeMap<Activity, Vec<f64>> = BTreeMap::new();
        for f in &self.folds {
            for a in &f.per_activity {
                acc.entry(a.activity).or_default().push(a.percent());
            }
        }
        acc.into_iter().map(|(a, v)| (a, mean_std(&v).0)).collect()
    }
}

pub fn run_loso(table: &FeatureTable, config: &LosoConfig) -> Result<LosoReport, EvalError> {
    if let Some(i) = table.samples.iter().position(|s| s.target.is_none()) {
        return Err(EvalError::MissingTarget(i));
    }
    let folds = loso_split(table)?;
    let run = || -> Result<Vec<FoldReport>, EvalError> {
        folds.par_iter().map(|f| run_fold(table, f, config)).collect()
    };
    let reports = if config.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.jobs)
            .build()
            .expect("thread pool")
            .install(run)?
    } else {
        run()?
    };
    Ok(LosoReport {
        task: table.task,
        blocks: config.blocks,
        folds: reports,
    })
}

fn run_fold(table: &FeatureTable, fold: &Fold, config: &LosoConfig) -> Result<FoldReport, EvalError> {
    let cols = config.blocks.columns(table.task);
    let rows = |idx: &[usize]| -> Vec<Vec<f64>> {
        idx.iter()
            .map(|&i| table.samples[i].features[cols.clone()].to_vec())
            .collect()
    };
    let target = |i: usize| table.samples[i].target.expect("checked by run_loso");
    assert!(
        fold.train
            .iter()
            .all(|&i| table.samples[i].participant != fold.held_out),
        "held-out participant leaked into training rows"
    );

    let scaler = MinMaxScaler::fit(&rows(&fold.train))?;
    let train_x = scaler.transform_all(&rows(&fold.train))?;
    let test_x = scaler.transform_all(&rows(&fold.test))?;
    let train_y: Vec<f64> = fold.train.iter().map(|&i| target(i)).collect();
    let test_y: Vec<f64> = fold.test.iter().map(|&i| target(i)).collect();

    let mlp = config.mlp.clone().with_input_size(cols.len());
    let fold_err = |source| EvalError::Fold {
        participant: fold.held_out.clone(),
        source,
    };
    let model = train(&mlp, &train_x, &train_y, None).map_err(fold_err)?;
    let predicted = model.predict_batch(&test_x).map_err(fold_err)?;

    let predictions: Vec<Prediction> = fold
        .test
        .iter()
        .zip(&predicted)
        .map(|(&index, &p)| Prediction {
            index,
            target: target(index),
            predicted: p,
        })
        .collect();

    let mut report = FoldReport {
        held_out: fold.held_out.clone(),
        n_train: fold.train.len(),
        n_test: fold.test.len(),
        mae: None,
        mape: None,
        naive_mae: None,
        accuracy: None,
        per_activity: Vec::new(),
        predictions,
        final_train_loss: model.history.last().map_or(f64::NAN, |h| h.train_loss),
    };
    if test_y.is_empty() {
        return Ok(report);
    }
    match table.task {
        Task::Intensity => {
            report.mae = Some(mae(&test_y, &predicted)?);
            report.mape = Some(mape(&test_y, &predicted)?);
            let naive = NaiveBaseline::fit(&train_y)?.predict();
            report.naive_mae = Some(mae(&test_y, &vec![naive; test_y.len()])?);
        }
        Task::Detection => {
            report.accuracy = Some(accuracy(&predicted, &test_y)?);
            let mut by_activity: BTreeMap<Activity, (usize, usize)> = BTreeMap::new();
            for p in &report.predictions {
                let e = by_activity
                    .entry(table.samples[p.index].activity)
                    .or_default();
                e.1 += 1;
                if (p.predicted >= 0.5) == (p.target >= 0.5) {
                    e.0 += 1;
                }
            }
            report.per_activity = by_activity
                .into_iter()
                .map(|(activity, (correct, total))| ActivityAccuracy {
                    activity,
                    correct,
                    total,
                })
                .collect();
        }
    }
    Ok(report)
}
