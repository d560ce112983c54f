//! Ground-truth scratch power from pressure-tablet contact traces.
//!
//! Per 1-s window: mean contact force (N) × mean stroke velocity (mm/s)
//! gives power in mW. Velocity comes from chord lengths between the
//! peaks and valleys of the smoothed y-trajectory.

mod peaks;
mod savgol;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::signal::linear_interpolate;

pub use peaks::{find_critical_points, CriticalKind, CriticalPoint, PeakConfig};
pub use savgol::{savgol_coefficients, savgol_smooth};

/// Tablet sensing area, mm.
pub const TABLET_WIDTH_MM: f64 = 240.0;
pub const TABLET_HEIGHT_MM: f64 = 139.0;
pub const TABLET_RATE_HZ: f64 = 150.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabelError {
    #[error("no contact in window")]
    NoContact,
    #[error("Savitzky-Golay window {window} cannot fit order {poly_order}")]
    Degenerate { poly_order: usize, window: usize },
    #[error("series of {actual} samples is shorter than the {needed}-point filter")]
    TooShort { needed: usize, actual: usize },
    #[error("{found} critical points in window, need at least 2")]
    TooFewCriticalPoints { found: usize },
    #[error("trace columns differ in length")]
    LengthMismatch,
    #[error("timestamps not increasing at sample {index}")]
    NonMonotonic { index: usize },
    #[error("sample {index}: position ({x}, {y}) mm outside the tablet")]
    OutOfRange { index: usize, x: f64, y: f64 },
    #[error("block length must be positive, got {0}")]
    BadBlockLength(f64),
}

/// Tablet samples for one scratching block. `NaN` marks samples without
/// contact (all of x, y and force are missing together in practice, but
/// each column is treated independently).
#[derive(Debug, Clone, PartialEq)]
pub struct ContactTrace {
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub force: Vec<f64>,
    pub block_start_s: f64,
    pub block_length_s: f64,
}

impl ContactTrace {
    pub fn new(
        block_start_s: f64,
        block_length_s: f64,
        t: Vec<f64>,
        x: Vec<f64>,
        y: Vec<f64>,
        force: Vec<f64>,
    ) -> Result<Self, LabelError> {
        if !(block_length_s > 0.0 && block_length_s.is_finite()) {
            return Err(LabelError::BadBlockLength(block_length_s));
        }
        if x.len() != t.len() || y.len() != t.len() || force.len() != t.len() {
            return Err(LabelError::LengthMismatch);
        }
        for index in 1..t.len() {
            if !(t[index] > t[index - 1]) {
                return Err(LabelError::NonMonotonic { index });
            }
        }
        for index in 0..t.len() {
            let (xi, yi) = (x[index], y[index]);
            let bad_x = !xi.is_nan() && !(0.0..=TABLET_WIDTH_MM).contains(&xi);
            let bad_y = !yi.is_nan() && !(0.0..=TABLET_HEIGHT_MM).contains(&yi);
            if bad_x || bad_y {
                return Err(LabelError::OutOfRange { index, x: xi, y: yi });
            }
        }
        Ok(Self {
            t,
            x,
            y,
            force,
            block_start_s,
            block_length_s,
        })
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Number of whole label windows in the block.
    pub fn window_count(&self, window_s: f64) -> usize {
        (self.block_length_s / window_s + 1e-9).floor() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelConfig {
    pub savgol_order: usize,
    pub savgol_window: usize,
    pub peaks: PeakConfig,
    /// Largest allowed position change between consecutive samples, mm.
    pub max_jump_mm: f64,
    pub max_power_mw: f64,
    pub window_s: f64,
}

impl Default for LabelConfig {
    fn default() -> Self {
        Self {
            savgol_order: 5,
            savgol_window: 31,
            peaks: PeakConfig::default(),
            max_jump_mm: 5.0,
            max_power_mw: 600.0,
            window_s: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RejectReason {
    NoContact,
    /// Too few samples in the block for the smoothing filter.
    TooShort,
    TooFewCriticalPoints,
    ConsecutiveSameKind,
    PositionJump,
    PowerTooHigh,
}

impl RejectReason {
    pub const ALL: [RejectReason; 6] = [
        RejectReason::NoContact,
        RejectReason::TooShort,
        RejectReason::TooFewCriticalPoints,
        RejectReason::ConsecutiveSameKind,
        RejectReason::PositionJump,
        RejectReason::PowerTooHigh,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RejectReason::NoContact => "NoContact",
            RejectReason::TooShort => "TooShort",
            RejectReason::TooFewCriticalPoints => "TooFewCriticalPoints",
            RejectReason::ConsecutiveSameKind => "ConsecutiveSameKind",
            RejectReason::PositionJump => "PositionJump",
            RejectReason::PowerTooHigh => "PowerTooHigh",
        }
    }
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RejectReason {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| format!("unknown reject reason '{s}'"))
    }
}

/// Power label for one window. Rejected windows keep whatever force and
/// velocity could be computed (`NaN` otherwise).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLabel {
    pub window_start: f64,
    pub mean_force: f64,
    pub mean_velocity: f64,
    pub power: f64,
    pub rejection: Option<RejectReason>,
}

impl PowerLabel {
    pub fn is_valid(&self) -> bool {
        self.rejection.is_none()
    }

    fn rejected(window_start: f64, reason: RejectReason) -> Self {
        Self {
            window_start,
            mean_force: f64::NAN,
            mean_velocity: f64::NAN,
            power: f64::NAN,
            rejection: Some(reason),
        }
    }
}

/// Mean of the observed (non-`NaN`) force samples.
pub fn mean_force(forces: &[f64]) -> Result<f64, LabelError> {
    let (sum, n) = forces
        .iter()
        .filter(|f| !f.is_nan())
        .fold((0.0, 0usize), |(s, n), f| (s + f, n + 1));
    if n == 0 {
        return Err(LabelError::NoContact);
    }
    Ok(sum / n as f64)
}

/// Mean over adjacent critical-point pairs of chord length / elapsed time.
pub fn mean_velocity(points: &[CriticalPoint]) -> Result<f64, LabelError> {
    if points.len() < 2 {
        return Err(LabelError::TooFewCriticalPoints {
            found: points.len(),
        });
    }
    let total: f64 = points
        .windows(2)
        .map(|w| {
            let d = (w[1].y - w[0].y).hypot(w[1].x - w[0].x);
            d / (w[1].t - w[0].t)
        })
        .sum();
    Ok(total / (points.len() - 1) as f64)
}

/// N × mm/s = mW.
pub fn power_label(mean_force_n: f64, mean_velocity_mm_s: f64) -> f64 {
    mean_force_n * mean_velocity_mm_s
}

/// Everything the outlier rules look at for one window.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowDiagnostics {
    pub window_start: f64,
    pub mean_force: Option<f64>,
    pub critical_points: Vec<CriticalPoint>,
    /// Largest |Δx| or |Δy| between consecutive interpolated samples.
    pub max_position_jump: f64,
}

/// Applies the rejection rules in order: no contact, fewer than two critical
/// points, repeated peak/valley, position jump, power above the ceiling.
pub fn filter_outliers(diag: &WindowDiagnostics, config: &LabelConfig) -> PowerLabel {
    let start = diag.window_start;
    let Some(force) = diag.mean_force else {
        return PowerLabel::rejected(start, RejectReason::NoContact);
    };
    let velocity = mean_velocity(&diag.critical_points).ok();
    let power = velocity.map(|v| power_label(force, v));
    let reason = if velocity.is_none() {
        Some(RejectReason::TooFewCriticalPoints)
    } else if diag
        .critical_points
        .windows(2)
        .any(|w| w[0].kind == w[1].kind)
    {
        Some(RejectReason::ConsecutiveSameKind)
    } else if diag.max_position_jump > config.max_jump_mm {
        Some(RejectReason::PositionJump)
    } else if power.is_some_and(|p| p > config.max_power_mw) {
        Some(RejectReason::PowerTooHigh)
    } else {
        None
    };
    PowerLabel {
        window_start: start,
        mean_force: force,
        mean_velocity: velocity.unwrap_or(f64::NAN),
        power: power.unwrap_or(f64::NAN),
        rejection: reason,
    }
}

/// Labels every whole window of a block. Per-window failures become
/// rejected labels; the block itself never errors.
pub fn label_block(trace: &ContactTrace, config: &LabelConfig) -> Vec<PowerLabel> {
    let n_windows = trace.window_count(config.window_s);
    let starts = (0..n_windows).map(|k| trace.block_start_s + k as f64 * config.window_s);

    let (x, y) = match (
        linear_interpolate(&trace.t, &trace.x),
        linear_interpolate(&trace.t, &trace.y),
    ) {
        (Ok(x), Ok(y)) => (x, y),
        _ => {
            return starts
                .map(|s| PowerLabel::rejected(s, RejectReason::NoContact))
                .collect()
        }
    };
    let smoothed = savgol_coefficients(config.savgol_order, config.savgol_window)
        .and_then(|c| savgol_smooth(&y, &c));
    let smoothed = match smoothed {
        Ok(s) => s,
        Err(_) => {
            return starts
                .map(|s| {
                    let reason = match window_slice(&trace.t, s, config.window_s) {
                        r if mean_force(&trace.force[r.clone()]).is_err() => RejectReason::NoContact,
                        _ => RejectReason::TooShort,
                    };
                    PowerLabel::rejected(s, reason)
                })
                .collect()
        }
    };
    let points = find_critical_points(&smoothed, &x, &trace.t, &config.peaks);

    starts
        .map(|start| {
            let range = window_slice(&trace.t, start, config.window_s);
            let end = start + config.window_s;
            let critical_points = points
                .iter()
                .filter(|p| p.t >= start && p.t < end)
                .copied()
                .collect();
            let max_position_jump = (range.start + 1..range.end)
                .map(|i| (x[i] - x[i - 1]).abs().max((y[i] - y[i - 1]).abs()))
                .fold(0.0, f64::max);
            let diag = WindowDiagnostics {
                window_start: start,
                mean_force: mean_force(&trace.force[range]).ok(),
                critical_points,
                max_position_jump,
            };
            filter_outliers(&diag, config)
        })
        .collect()
}

fn window_slice(t: &[f64], start: f64, len: f64) -> std::ops::Range<usize> {
    let lo = t.partition_point(|&v| v < start);
    let hi = t.partition_point(|&v| v < start + len);
    lo..hi
}
