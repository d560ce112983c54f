//! Peak and valley detection on the smoothed y-trajectory.
//!
//! Local extrema are kept when their topographic prominence reaches
//! `min_prominence` and no stronger extremum of the same kind lies within
//! `min_separation_s`.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CriticalKind {
    Peak,
    Valley,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalPoint {
    pub index: usize,
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub kind: CriticalKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakConfig {
    /// mm
    pub min_prominence: f64,
    /// s
    pub min_separation_s: f64,
}

impl Default for PeakConfig {
    fn default() -> Self {
        Self {
            min_prominence: 2.0,
            min_separation_s: 0.05,
        }
    }
}

/// Critical points of `y` in time order, with the matching `x` and `t`.
pub fn find_critical_points(
    y: &[f64],
    x: &[f64],
    t: &[f64],
    config: &PeakConfig,
) -> Vec<CriticalPoint> {
    assert!(y.len() == x.len() && y.len() == t.len(), "parallel slices");
    let neg: Vec<f64> = y.iter().map(|v| -v).collect();
    let mut points: Vec<CriticalPoint> = select_maxima(y, t, config)
        .into_iter()
        .map(|i| (i, CriticalKind::Peak))
        .chain(
            select_maxima(&neg, t, config)
                .into_iter()
                .map(|i| (i, CriticalKind::Valley)),
        )
        .map(|(index, kind)| CriticalPoint {
            index,
            t: t[index],
            x: x[index],
            y: y[index],
            kind,
        })
        .collect();
    points.sort_by_key(|p| p.index);
    points
}

fn select_maxima(y: &[f64], t: &[f64], config: &PeakConfig) -> Vec<usize> {
    let mut candidates: Vec<(usize, f64)> = local_maxima(y)
        .into_iter()
        .map(|i| (i, prominence(y, i)))
        .filter(|&(_, p)| p >= config.min_prominence)
        .collect();

    // Strongest first; ties keep the earlier index.
    candidates.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut kept: Vec<usize> = Vec::new();
    for (i, _) in candidates {
        if kept
            .iter()
            .all(|&k| (t[k] - t[i]).abs() >= config.min_separation_s)
        {
            kept.push(i);
        }
    }
    kept.sort_unstable();
    kept
}

/// Strict local maxima; a flat top counts once, at its (left-biased) middle.
fn local_maxima(y: &[f64]) -> Vec<usize> {
    let mut out = Vec::new();
    let n = y.len();
    let mut i = 1;
    while i + 1 < n {
        if y[i - 1] < y[i] {
            let mut ahead = i + 1;
            while ahead + 1 < n && y[ahead] == y[i] {
                ahead += 1;
            }
            if y[ahead] < y[i] {
                out.push((i + ahead - 1) / 2);
                i = ahead;
                continue;
            }
        }
        i += 1;
    }
    out
}

/// Height above the higher of the two lowest points reached before meeting
/// a strictly taller sample (or the series edge) on either side.
fn prominence(y: &[f64], peak: usize) -> f64 {
    let h = y[peak];
    let mut left_min = h;
    for &v in y[..peak].iter().rev() {
        if v > h {
            break;
        }
        left_min = left_min.min(v);
    }
    let mut right_min = h;
    for &v in &y[peak + 1..] {
        if v > h {
            break;
        }
        right_min = right_min.min(v);
    }
    h - left_min.max(right_min)
}
