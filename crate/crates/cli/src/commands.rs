use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Subcommand;

use scratchq::dataset::FeatureTable;
use scratchq::eval::{mae, run_loso, LosoConfig};
use scratchq::io::{
    load_session, load_model, read_features_csv, read_labels_csv, read_tablet_csv, save_model, save_session,
    write_features_csv, write_labels_csv, write_predictions_csv, write_tablet_csv, LabelRecord, PredictionRecord,
    TabletStream,
};
use scratchq::labeling::{label_block, LabelConfig, TABLET_RATE_HZ};
use scratchq::pipeline::{featurize_session, label_session, predict_table, train_model};
use scratchq::signal::WindowConfig;
use scratchq::spectral::Task;
use scratchq::synth::{gen_contact_trace, synth_session, SessionSpec, SyntheticScratchSpec};

use crate::output::{num, opt, write_csv};
use crate::settings::Settings;

fn is_manifest(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "json")
}

pub fn label(inputs: &[PathBuf], out: &Path, participant: Option<&str>, block_length: f64) -> Result<()> {
    if !(block_length > 0.0 && block_length.is_finite()) {
        bail!("--block-length must be positive");
    }
    let config = LabelConfig::default();
    let mut records = Vec::new();
    for input in inputs {
        if is_manifest(input) {
            let session = load_session(input)?;
            records.extend(label_session(&session, &config).with_context(|| input.display().to_string())?);
            continue;
        }
        let stream = read_tablet_csv(input)?;
        let pid = match participant {
            Some(p) => p.to_string(),
            None => input
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default(),
        };
        let (Some(&first), Some(&last)) = (stream.t.first(), stream.t.last()) else {
            bail!("{}: no tablet samples", input.display());
        };
        let end = last + 1.0 / TABLET_RATE_HZ;
        let mut start = first;
        while start < end - 1e-9 {
            let trace = stream
                .block(start, block_length.min(end - start))
                .with_context(|| input.display().to_string())?;
            records.extend(label_block(&trace, &config).into_iter().map(|label| LabelRecord {
                participant: pid.clone(),
                activity: None,
                label,
            }));
            start += block_length;
        }
    }
    write_labels_csv(out, &records)?;
    let valid = records.iter().filter(|r| r.label.is_valid()).count();
    println!("{valid} valid, {} invalid labels -> {}", records.len() - valid, out.display());
    Ok(())
}

pub fn featurize(manifests: &[PathBuf], out: &Path, labels: Option<&Path>, settings: &Settings) -> Result<()> {
    let task = settings.require_task()?;
    let labels = labels.map(read_labels_csv).transpose()?;
    let mut table = FeatureTable::new(task);
    for m in manifests {
        let session = load_session(m)?;
        let rows = featurize_session(
            &session,
            task,
            labels.as_deref(),
            &WindowConfig::default(),
            &LabelConfig::default(),
        )
        .with_context(|| m.display().to_string())?;
        table.samples.extend(rows.samples);
    }
    write_features_csv(out, &table)?;
    let labeled = table.samples.iter().filter(|s| s.target.is_some()).count();
    println!(
        "{} windows x {} features ({labeled} labeled) -> {}",
        table.len(),
        task.dims(),
        out.display()
    );
    Ok(())
}

fn check_task(settings: &Settings, table: &FeatureTable) -> Result<()> {
    match settings.task {
        Some(t) if t != table.task => bail!("--task {t} but the feature file holds {} features", table.task),
        _ => Ok(()),
    }
}

pub fn train(features: &Path, out: &Path, history: Option<PathBuf>, settings: &Settings) -> Result<()> {
    let table = read_features_csv(features)?;
    check_task(settings, &table)?;
    let config = settings.mlp_config(table.task)?;
    let model = train_model(&table, settings.ablation, &config)?;
    save_model(out, &model, table.task)?;

    let history = history.unwrap_or_else(|| {
        let mut p = out.as_os_str().to_owned();
        p.push(".history.csv");
        PathBuf::from(p)
    });
    write_csv(
        &history,
        &["epoch", "train_loss", "eval_loss"],
        model
            .history
            .iter()
            .map(|h| vec![h.epoch.to_string(), num(h.train_loss), opt(h.eval_loss)]),
    )?;

    let labeled = table.labeled();
    let predicted = predict_table(&model, &labeled)?;
    let targets: Vec<f64> = labeled.samples.iter().filter_map(|s| s.target).collect();
    match table.task {
        Task::Intensity => println!("training MAE {:.3} mW on {} rows", mae(&targets, &predicted)?, targets.len()),
        Task::Detection => println!(
            "training accuracy {:.2} % on {} rows",
            scratchq::eval::accuracy(&predicted, &targets)?,
            targets.len()
        ),
    }
    println!("model -> {}, history -> {}", out.display(), history.display());
    Ok(())
}

pub fn loso(features: &Path, out: &Path, settings: &Settings) -> Result<()> {
    let table = read_features_csv(features)?.labeled();
    check_task(settings, &table)?;
    let config = LosoConfig {
        mlp: settings.mlp_config(table.task)?,
        blocks: settings.ablation,
        jobs: settings.jobs,
    };
    let report = run_loso(&table, &config)?;

    write_csv(
        &out.join("folds.csv"),
        &[
            "held_out",
            "n_train",
            "n_test",
            "mae_mw",
            "mape_pct",
            "naive_mae_mw",
            "accuracy_pct",
            "final_train_loss",
        ],
        report.folds.iter().map(|f| {
            vec![
                f.held_out.clone(),
                f.n_train.to_string(),
                f.n_test.to_string(),
                opt(f.mae),
                opt(f.mape),
                opt(f.naive_mae),
                opt(f.accuracy),
                num(f.final_train_loss),
            ]
        }),
    )?;

    let metrics = [
        ("mae_mw", report.mae()),
        ("mape_pct", report.mape()),
        ("naive_mae_mw", report.naive_mae()),
        ("accuracy_pct", report.accuracy()),
    ];
    let summary: Vec<Vec<String>> = metrics
        .iter()
        .filter_map(|(name, v)| v.map(|(m, s)| vec![name.to_string(), num(m), num(s), report.folds.len().to_string()]))
        .collect();
    write_csv(&out.join("summary.csv"), &["metric", "mean", "std", "folds"], summary.clone())?;

    if table.task == Task::Detection {
        write_csv(
            &out.join("activity.csv"),
            &["activity", "accuracy_pct"],
            report
                .activity_accuracy()
                .into_iter()
                .map(|(a, acc)| vec![a.to_string(), num(acc)]),
        )?;
    }

    let mut preds: Vec<_> = report.folds.iter().flat_map(|f| f.predictions.iter()).collect();
    preds.sort_by_key(|p| p.index);
    let records = preds
        .into_iter()
        .map(|p| {
            let s = &table.samples[p.index];
            let (prob, power) = match table.task {
                Task::Detection => (Some(p.predicted), None),
                Task::Intensity => (None, Some(p.predicted)),
            };
            Ok(PredictionRecord {
                participant: s.participant.clone(),
                activity: s.activity,
                window_start: s.window_start,
                target: Some(p.target),
                scratch_prob: prob,
                power_mw: power,
                vas_units: match (settings.vas, power) {
                    (Some(v), Some(p)) => Some(v.map(p)?),
                    _ => None,
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    write_predictions_csv(&out.join("predictions.csv"), &records)?;

    for row in &summary {
        println!("{:<14} {:>10} ± {}", row[0], row[1], row[2]);
    }
    println!("report -> {}", out.display());
    Ok(())
}

pub fn predict(
    manifests: &[PathBuf],
    intensity_model: Option<&Path>,
    detection_model: Option<&Path>,
    out: &Path,
    settings: &Settings,
) -> Result<()> {
    if intensity_model.is_none() && detection_model.is_none() {
        bail!("give --intensity-model, --detection-model or both");
    }
    let intensity = intensity_model
        .map(|p| load_model(p, Some(Task::Intensity)))
        .transpose()?;
    let detection = detection_model
        .map(|p| load_model(p, Some(Task::Detection)))
        .transpose()?;
    let window = WindowConfig::default();
    let label_config = LabelConfig::default();
    let mut records = Vec::new();
    for m in manifests {
        let session = load_session(m)?;
        let ctx = || m.display().to_string();
        // Only valid labels are joined so that no window is dropped.
        let labels: Vec<LabelRecord> = match &session.tablet {
            Some(_) => label_session(&session, &label_config)
                .with_context(ctx)?
                .into_iter()
                .filter(|l| l.label.is_valid())
                .collect(),
            None => Vec::new(),
        };
        let det = match &detection {
            Some(model) => {
                let t = featurize_session(&session, Task::Detection, None, &window, &label_config).with_context(ctx)?;
                let p = predict_table(model, &t).with_context(ctx)?;
                Some((t, p))
            }
            None => None,
        };
        let int = match &intensity {
            Some(model) => {
                let t = featurize_session(&session, Task::Intensity, Some(&labels), &window, &label_config)
                    .with_context(ctx)?;
                let p = predict_table(model, &t).with_context(ctx)?;
                Some((t, p))
            }
            None => None,
        };
        let base = int.as_ref().or(det.as_ref()).map(|(t, _)| t).expect("at least one model");
        for (i, s) in base.samples.iter().enumerate() {
            let power = int.as_ref().map(|(_, p)| p[i]);
            records.push(PredictionRecord {
                participant: s.participant.clone(),
                activity: s.activity,
                window_start: s.window_start,
                target: s.target,
                scratch_prob: det.as_ref().map(|(_, p)| p[i]),
                power_mw: power,
                vas_units: match (settings.vas, power) {
                    (Some(v), Some(p)) => Some(v.map(p)?),
                    _ => None,
                },
            });
        }
    }
    write_predictions_csv(out, &records)?;
    println!("{} windows -> {}", records.len(), out.display());
    Ok(())
}

#[derive(Debug, Subcommand)]
pub enum SynthCommand {
    /// Tablet CSV from a scratch spec, plus per-second true power.
    Trace {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Session directory (manifest, streams, truth.csv) from a session spec.
    Session {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn read_spec<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("{}: cannot read", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("{}: invalid spec", path.display()))
}

fn write_truth(path: &Path, truth: impl IntoIterator<Item = (f64, f64)>) -> Result<()> {
    write_csv(
        path,
        &["window_start_s", "power_mw"],
        truth.into_iter().map(|(t, p)| vec![num(t), num(p)]),
    )
}

pub fn synth(cmd: SynthCommand) -> Result<()> {
    match cmd {
        SynthCommand::Trace { spec, out, truth } => {
            let spec: SyntheticScratchSpec = read_spec(&spec)?;
            let g = gen_contact_trace(&spec)?;
            let tr = g.trace;
            let stream = TabletStream {
                t: tr.t,
                x: tr.x,
                y: tr.y,
                force: tr.force,
            };
            write_tablet_csv(&out, &stream)?;
            if let Some(truth) = truth {
                write_truth(&truth, g.true_power.iter().enumerate().map(|(k, &p)| (k as f64, p)))?;
            }
            println!("{} samples -> {}", stream.t.len(), out.display());
        }
        SynthCommand::Session { spec, out } => {
            let spec: SessionSpec = read_spec(&spec)?;
            let s = synth_session(&spec)?;
            save_session(&out.join("session.json"), &s.session)?;
            write_truth(&out.join("truth.csv"), s.true_power.iter().copied())?;
            println!("session -> {}", out.join("session.json").display());
        }
    }
    Ok(())
}
