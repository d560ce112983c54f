//! `stats` and `report` subcommands.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Result};
use clap::{Subcommand, ValueEnum};

use scratchq::activity::{Activity, Surface};
use scratchq::eval::{
    adjacent_level_tests, error_by_range, grand_level_means, level_means, level_spearman, mae, mean_std, scale_fits,
    spearman, summarize, wilcoxon_signed_rank, LevelObservation, StatTestResult, WilcoxonMode,
};
use scratchq::io::{read_columns, read_labels_csv, read_predictions_csv, IoError, LabelRecord, PredictionRecord};

use crate::output::{num, write_csv};

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Mode {
    Auto,
    Exact,
    Normal,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Column {
    PowerMw,
    VasUnits,
    Target,
}

impl Column {
    fn pick(self, r: &PredictionRecord) -> Option<f64> {
        match self {
            Column::PowerMw => r.power_mw,
            Column::VasUnits => r.vas_units,
            Column::Target => r.target,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SurfaceArg {
    Tablet,
    Skin,
}

impl From<SurfaceArg> for Surface {
    fn from(s: SurfaceArg) -> Self {
        match s {
            SurfaceArg::Tablet => Surface::Tablet,
            SurfaceArg::Skin => Surface::Skin,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum StatsCommand {
    /// Paired Wilcoxon signed-rank test between two columns.
    Wilcoxon {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long, value_enum, default_value = "auto")]
        mode: Mode,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Spearman rank correlation between two columns.
    Spearman {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Level-by-level tests on instructed-intensity sets in a predictions file.
    Levels {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long, value_enum, default_value = "skin")]
        surface: SurfaceArg,
        #[arg(long, value_enum, default_value = "power-mw")]
        column: Column,
        /// Min-max scale each set before the correlation.
        #[arg(long)]
        normalize: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn test_row(name: &str, r: &StatTestResult) -> Vec<String> {
    vec![
        name.to_string(),
        r.method.as_str().to_string(),
        num(r.statistic),
        num(r.p_value),
        r.n.to_string(),
    ]
}

const TEST_HEADER: [&str; 5] = ["comparison", "method", "statistic", "p_value", "n"];

fn emit(rows: Vec<Vec<String>>, out: Option<&Path>) -> Result<()> {
    for r in &rows {
        println!("{:<12} {:<16} stat {:>10}  p {:>12}  n {}", r[0], r[1], r[2], r[3], r[4]);
    }
    match out {
        Some(path) => write_csv(path, &TEST_HEADER, rows),
        None => Ok(()),
    }
}

pub fn stats(cmd: StatsCommand) -> Result<()> {
    match cmd {
        StatsCommand::Wilcoxon { input, a, b, mode, out } => {
            let cols = read_columns(&input, &[&a, &b])?;
            let mode = match mode {
                Mode::Auto => WilcoxonMode::Auto,
                Mode::Exact => WilcoxonMode::Exact,
                Mode::Normal => WilcoxonMode::Normal,
            };
            let r = wilcoxon_signed_rank(&cols[0], &cols[1], mode)?;
            emit(vec![test_row(&format!("{a}-{b}"), &r)], out.as_deref())
        }
        StatsCommand::Spearman { input, x, y, out } => {
            let cols = read_columns(&input, &[&x, &y])?;
            let r = spearman(&cols[0], &cols[1])?;
            emit(vec![test_row(&format!("{x}-{y}"), &r)], out.as_deref())
        }
        StatsCommand::Levels {
            predictions,
            surface,
            column,
            normalize,
            out,
        } => {
            let records = read_predictions_csv(&predictions)?;
            let obs = instructed(records.iter().filter_map(|r| Some((r.participant.as_str(), r.activity, column.pick(r)?))), surface.into());
            if obs.is_empty() {
                bail!("{}: no instructed-level rows with a value", predictions.display());
            }
            let means = level_means(&obs);
            for (level, m) in grand_level_means(&means) {
                println!("level {level}: mean {m:.3}");
            }
            let mut rows: Vec<Vec<String>> = adjacent_level_tests(&means)?
                .iter()
                .map(|c| test_row(&format!("{}-{}", c.upper, c.lower), &c.result))
                .collect();
            rows.push(test_row("rho", &level_spearman(&means, normalize)?));
            emit(rows, out.as_deref())
        }
    }
}

fn instructed<'a>(rows: impl Iterator<Item = (&'a str, Activity, f64)>, surface: Surface) -> Vec<LevelObservation> {
    rows.filter_map(|(p, a, value)| match a {
        Activity::Instructed { surface: s, set, level } if s == surface => Some(LevelObservation {
            participant: p.to_string(),
            set,
            level,
            value,
        }),
        _ => None,
    })
    .collect()
}

const RANGE_EDGES: [f64; 7] = [0.0, 100.0, 200.0, 300.0, 400.0, 500.0, 600.0];

pub fn report(dir: &Path, out: &Path) -> Result<()> {
    let labels_path = dir.join("labels.csv");
    let preds_path = dir.join("predictions.csv");
    let labels = labels_path.exists().then(|| read_labels_csv(&labels_path)).transpose()?;
    let preds = preds_path.exists().then(|| read_predictions_csv(&preds_path)).transpose()?;
    if labels.is_none() && preds.is_none() {
        return Err(IoError::MissingFile { path: labels_path.display().to_string() }.into());
    }
    if let Some(labels) = &labels {
        label_report(labels, out)?;
    }
    if let Some(preds) = &preds {
        prediction_report(preds, out)?;
    }
    println!("report -> {}", out.display());
    Ok(())
}

fn label_report(labels: &[LabelRecord], out: &Path) -> Result<()> {
    let mut groups: BTreeMap<String, (Vec<f64>, usize)> = BTreeMap::new();
    for r in labels {
        let key = r.activity.unwrap_or_default().to_string();
        let e = groups.entry(key).or_default();
        if r.label.is_valid() {
            e.0.push(r.label.power);
        } else {
            e.1 += 1;
        }
    }
    let rows = groups.into_iter().map(|(activity, (powers, rejected))| {
        let s = summarize(&powers).ok();
        vec![
            activity,
            powers.len().to_string(),
            rejected.to_string(),
            s.as_ref().map_or_else(String::new, |s| num(s.mean)),
            s.as_ref().map_or_else(String::new, |s| num(s.std)),
            s.as_ref().map_or_else(String::new, |s| num(s.median)),
        ]
    });
    write_csv(
        &out.join("label_summary.csv"),
        &["activity", "valid", "rejected", "mean_mw", "std_mw", "median_mw"],
        rows,
    )?;

    let obs: Vec<LevelObservation> = labels
        .iter()
        .filter(|r| r.label.is_valid())
        .filter_map(|r| match r.activity {
            Some(Activity::Instructed { set, level, .. }) => Some(LevelObservation {
                participant: r.participant.clone(),
                set,
                level,
                value: r.label.power,
            }),
            _ => None,
        })
        .collect();
    if obs.is_empty() {
        return Ok(());
    }
    let fits = scale_fits(&obs)?;
    let (slope, _) = mean_std(&fits.iter().map(|f| f.slope).collect::<Vec<_>>());
    let (intercept, _) = mean_std(&fits.iter().map(|f| f.intercept).collect::<Vec<_>>());
    let mut rows: Vec<Vec<String>> = fits
        .iter()
        .map(|f| vec![f.participant.clone(), num(f.slope), num(f.intercept)])
        .collect();
    rows.push(vec!["mean".into(), num(slope), num(intercept)]);
    write_csv(
        &out.join("scale_fits.csv"),
        &["participant", "slope_mw_per_unit", "intercept_mw"],
        rows,
    )
}

fn prediction_report(preds: &[PredictionRecord], out: &Path) -> Result<()> {
    let scored: Vec<(&PredictionRecord, f64, f64)> = preds
        .iter()
        .filter_map(|r| Some((r, r.target?, r.power_mw?)))
        .collect();
    if scored.is_empty() {
        return Ok(());
    }
    let targets: Vec<f64> = scored.iter().map(|s| s.1).collect();
    let predicted: Vec<f64> = scored.iter().map(|s| s.2).collect();
    write_csv(
        &out.join("error_by_range.csv"),
        &["lo_mw", "hi_mw", "count", "mae_mw"],
        error_by_range(&targets, &predicted, &RANGE_EDGES)?
            .into_iter()
            .map(|r| vec![num(r.lo), num(r.hi), r.count.to_string(), r.mae.map_or_else(String::new, num)]),
    )?;

    let mut by: BTreeMap<String, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for (r, t, p) in &scored {
        let e = by.entry(r.activity.to_string()).or_default();
        e.0.push(*t);
        e.1.push(*p);
    }
    let rows = by
        .into_iter()
        .map(|(a, (t, p))| {
            Ok(vec![
                a,
                t.len().to_string(),
                num(mean_std(&t).0),
                num(mean_std(&p).0),
                num(mae(&t, &p)?),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    write_csv(
        &out.join("combo_error.csv"),
        &["activity", "count", "mean_target_mw", "mean_predicted_mw", "mae_mw"],
        rows,
    )
}
