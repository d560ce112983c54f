//! Analyses of the instructed-intensity validation sessions and label
//! summaries used by the reports.

use std::collections::BTreeMap;

use super::metrics::{mae, mean_std, median};
use super::stats::{linear_fit, min_max_normalize, spearman, wilcoxon_signed_rank, StatTestResult, WilcoxonMode};
use super::EvalError;

/// One value observed during an instructed set at a given level (1-5).
#[derive(Debug, Clone, PartialEq)]
pub struct LevelObservation {
    pub participant: String,
    pub set: u8,
    pub level: u8,
    pub value: f64,
}

/// Mean value per (participant, set), per level.
pub type LevelMeans = BTreeMap<(String, u8), BTreeMap<u8, f64>>;

pub fn level_means(obs: &[LevelObservation]) -> LevelMeans {
    let mut sums: BTreeMap<(String, u8), BTreeMap<u8, (f64, usize)>> = BTreeMap::new();
    for o in obs {
        let e = sums
            .entry((o.participant.clone(), o.set))
            .or_default()
            .entry(o.level)
            .or_default();
        e.0 += o.value;
        e.1 += 1;
    }
    sums.into_iter()
        .map(|(k, levels)| (k, levels.into_iter().map(|(l, (s, n))| (l, s / n as f64)).collect()))
        .collect()
}

/// Mean over sets of each level's mean.
pub fn grand_level_means(means: &LevelMeans) -> BTreeMap<u8, f64> {
    let mut acc: BTreeMap<u8, Vec<f64>> = BTreeMap::new();
    for levels in means.values() {
        for (&l, &v) in levels {
            acc.entry(l).or_default().push(v);
        }
    }
    acc.into_iter().map(|(l, v)| (l, mean_std(&v).0)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelComparison {
    pub lower: u8,
    pub upper: u8,
    pub result: StatTestResult,
}

/// Wilcoxon test for each pair of consecutive levels, paired over the sets
/// that contain both.
pub fn adjacent_level_tests(means: &LevelMeans) -> Result<Vec<LevelComparison>, EvalError> {
    let levels: Vec<u8> = grand_level_means(means).into_keys().collect();
    levels
        .windows(2)
        .map(|w| {
            let (lo, hi) = (w[0], w[1]);
            let (a, b): (Vec<f64>, Vec<f64>) = means
                .values()
                .filter_map(|m| Some((*m.get(&hi)?, *m.get(&lo)?)))
                .unzip();
            Ok(LevelComparison {
                lower: lo,
                upper: hi,
                result: wilcoxon_signed_rank(&a, &b, WilcoxonMode::Auto)?,
            })
        })
        .collect()
}

/// Spearman correlation between level and per-set mean; with `normalize`
/// each set's means are min-max scaled first. Sets whose means are all
/// equal are skipped when normalizing.
pub fn level_spearman(means: &LevelMeans, normalize: bool) -> Result<StatTestResult, EvalError> {
    let mut x = Vec::new();
    let mut y = Vec::new();
    for levels in means.values() {
        let vals: Vec<f64> = levels.values().copied().collect();
        if normalize && vals.iter().all(|v| *v == vals[0]) {
            continue;
        }
        let vals = if normalize { min_max_normalize(&vals) } else { vals };
        x.extend(levels.keys().map(|&l| f64::from(l)));
        y.extend(vals);
    }
    spearman(&x, &y)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaleFit {
    pub participant: String,
    /// mW per 0-10 unit.
    pub slope: f64,
    pub intercept: f64,
}

/// Per participant, least-squares line of value against level × 2 (levels
/// 1-5 mapped onto the 0-10 scale).
pub fn scale_fits(obs: &[LevelObservation]) -> Result<Vec<ScaleFit>, EvalError> {
    let mut by: BTreeMap<&str, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for o in obs {
        let e = by.entry(&o.participant).or_default();
        e.0.push(2.0 * f64::from(o.level));
        e.1.push(o.value);
    }
    by.into_iter()
        .map(|(p, (x, y))| {
            let (slope, intercept) = linear_fit(&x, &y)?;
            Ok(ScaleFit {
                participant: p.to_string(),
                slope,
                intercept,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RangeError {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub mae: Option<f64>,
}

/// MAE of predictions grouped by target range `[edges[i], edges[i+1])`.
pub fn error_by_range(targets: &[f64], predicted: &[f64], edges: &[f64]) -> Result<Vec<RangeError>, EvalError> {
    if targets.len() != predicted.len() {
        return Err(EvalError::LengthMismatch(targets.len(), predicted.len()));
    }
    edges
        .windows(2)
        .map(|w| {
            let (t, p): (Vec<f64>, Vec<f64>) = targets
                .iter()
                .zip(predicted)
                .filter(|(t, _)| **t >= w[0] && **t < w[1])
                .map(|(t, p)| (*t, *p))
                .unzip();
            Ok(RangeError {
                lo: w[0],
                hi: w[1],
                count: t.len(),
                mae: if t.is_empty() { None } else { Some(mae(&t, &p)?) },
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub median: f64,
}

pub fn summarize(values: &[f64]) -> Result<Summary, EvalError> {
    if values.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let (mean, std) = mean_std(values);
    Ok(Summary {
        count: values.len(),
        mean,
        std,
        median: median(values),
    })
}
