//! Time-series primitives shared by every stage: channels, gap filling and
//! fixed-length windowing of the ring's two sensor streams.
//!
//! Missing samples are represented as `NaN`, the same marker the tablet API
//! and the raw sensor exports use.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::activity::Activity;

/// Samples per window for the contact microphone (8 kHz, 1 s).
pub const CM_WINDOW_LEN: usize = 8000;
/// Samples per window for the accelerometer z-axis (400 Hz, 1 s).
pub const ACC_WINDOW_LEN: usize = 400;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SignalError {
    #[error("series has no observed value")]
    AllMissing,
    #[error("timestamps and values differ in length ({timestamps} vs {values})")]
    LengthMismatch { timestamps: usize, values: usize },
    #[error("timestamps decrease at index {index}")]
    NonMonotonic { index: usize },
    #[error("non-finite timestamp at index {index}")]
    BadTimestamp { index: usize },
    #[error("span of {span_s} s is shorter than the {window_s} s window")]
    DurationTooShort { span_s: f64, window_s: f64 },
    #[error("stride {stride_s} s is not a whole number of samples at {rate_hz} Hz")]
    StrideMisaligned { stride_s: f64, rate_hz: f64 },
    #[error("window must hold {expected} samples, got {actual}")]
    WindowLength { expected: usize, actual: usize },
    #[error("window contains missing or non-finite samples")]
    WindowNotFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Channel {
    ContactMic,
    AccelZ,
    TabletForce,
    TabletX,
    TabletY,
}

impl Channel {
    pub fn nominal_rate_hz(self) -> f64 {
        match self {
            Channel::ContactMic => 8000.0,
            Channel::AccelZ => 400.0,
            Channel::TabletForce | Channel::TabletX | Channel::TabletY => 150.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    channel: Channel,
    sample_rate_hz: f64,
    timestamps: Vec<f64>,
    values: Vec<f64>,
}

impl TimeSeries {
    /// Builds a series from raw samples. Timestamps must be non-decreasing;
    /// repeated timestamps are collapsed onto their first observed value.
    pub fn new(
        channel: Channel,
        sample_rate_hz: f64,
        timestamps: Vec<f64>,
        values: Vec<f64>,
    ) -> Result<Self, SignalError> {
        if timestamps.len() != values.len() {
            return Err(SignalError::LengthMismatch {
                timestamps: timestamps.len(),
                values: values.len(),
            });
        }
        let mut ts: Vec<f64> = Vec::with_capacity(timestamps.len());
        let mut vs: Vec<f64> = Vec::with_capacity(values.len());
        for (index, (&t, &v)) in timestamps.iter().zip(&values).enumerate() {
            if !t.is_finite() {
                return Err(SignalError::BadTimestamp { index });
            }
            match ts.last() {
                Some(&prev) if t < prev => return Err(SignalError::NonMonotonic { index }),
                Some(&prev) if t == prev => {
                    let last = vs.last_mut().expect("parallel vectors");
                    if last.is_nan() {
                        *last = v;
                    }
                }
                _ => {
                    ts.push(t);
                    vs.push(v);
                }
            }
        }
        Ok(Self {
            channel,
            sample_rate_hz,
            timestamps: ts,
            values: vs,
        })
    }

    /// Series sampled uniformly at the channel's nominal rate from `start_s`.
    pub fn uniform(channel: Channel, start_s: f64, values: Vec<f64>) -> Self {
        let rate = channel.nominal_rate_hz();
        let timestamps = (0..values.len())
            .map(|i| start_s + i as f64 / rate)
            .collect();
        Self {
            channel,
            sample_rate_hz: rate,
            timestamps,
            values,
        }
    }

    pub fn channel(&self) -> Channel {
        self.channel
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn timestamps(&self) -> &[f64] {
        &self.timestamps
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn has_missing(&self) -> bool {
        self.values.iter().any(|v| v.is_nan())
    }

    /// First timestamp and the end of the last sample period.
    pub fn span(&self) -> Option<(f64, f64)> {
        let first = *self.timestamps.first()?;
        let last = *self.timestamps.last()?;
        Some((first, last + 1.0 / self.sample_rate_hz))
    }

    pub fn interpolated(&self) -> Result<Self, SignalError> {
        Ok(Self {
            channel: self.channel,
            sample_rate_hz: self.sample_rate_hz,
            timestamps: self.timestamps.clone(),
            values: linear_interpolate(&self.timestamps, &self.values)?,
        })
    }
}

/// Fills `NaN` gaps by linear interpolation in time between the nearest
/// observed neighbours. Leading and trailing gaps take the nearest observed
/// value. Observed values are copied through untouched.
pub fn linear_interpolate(timestamps: &[f64], values: &[f64]) -> Result<Vec<f64>, SignalError> {
    if timestamps.len() != values.len() {
        return Err(SignalError::LengthMismatch {
            timestamps: timestamps.len(),
            values: values.len(),
        });
    }
    let observed: Vec<usize> = (0..values.len()).filter(|&i| !values[i].is_nan()).collect();
    let (&first, &last) = match (observed.first(), observed.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(SignalError::AllMissing),
    };

    let mut out = values.to_vec();
    out[..first].fill(values[first]);
    out[last + 1..].fill(values[last]);
    for pair in observed.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if b == a + 1 {
            continue;
        }
        let (ta, tb) = (timestamps[a], timestamps[b]);
        let (va, vb) = (values[a], values[b]);
        for i in a + 1..b {
            let frac = (timestamps[i] - ta) / (tb - ta);
            out[i] = va + (vb - va) * frac;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowConfig {
    pub window_s: f64,
    pub stride_s: f64,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self {
            window_s: 1.0,
            stride_s: 0.25,
        }
    }
}

const TIME_EPS: f64 = 1e-9;

impl WindowConfig {
    /// Number of full windows that fit in `span_s`; zero when the span is
    /// shorter than one window.
    pub fn count(&self, span_s: f64) -> usize {
        if span_s + TIME_EPS < self.window_s {
            return 0;
        }
        ((span_s - self.window_s) / self.stride_s + TIME_EPS).floor() as usize + 1
    }

    fn check_stride(&self, rate_hz: f64) -> Result<(), SignalError> {
        let samples = self.stride_s * rate_hz;
        if (samples - samples.round()).abs() > 1e-6 || samples.round() < 1.0 {
            return Err(SignalError::StrideMisaligned {
                stride_s: self.stride_s,
                rate_hz,
            });
        }
        Ok(())
    }
}

/// One second of both ring channels, gap-free.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorWindow {
    cm: Vec<f64>,
    acc_z: Vec<f64>,
    pub start_time: f64,
    pub participant_id: String,
    pub activity: Activity,
}

impl SensorWindow {
    pub fn new(
        cm: Vec<f64>,
        acc_z: Vec<f64>,
        start_time: f64,
        participant_id: impl Into<String>,
        activity: Activity,
    ) -> Result<Self, SignalError> {
        if cm.len() != CM_WINDOW_LEN {
            return Err(SignalError::WindowLength {
                expected: CM_WINDOW_LEN,
                actual: cm.len(),
            });
        }
        if acc_z.len() != ACC_WINDOW_LEN {
            return Err(SignalError::WindowLength {
                expected: ACC_WINDOW_LEN,
                actual: acc_z.len(),
            });
        }
        if cm.iter().chain(&acc_z).any(|v| !v.is_finite()) {
            return Err(SignalError::WindowNotFinite);
        }
        Ok(Self {
            cm,
            acc_z,
            start_time,
            participant_id: participant_id.into(),
            activity,
        })
    }

    pub fn zeros(start_time: f64) -> Self {
        Self {
            cm: vec![0.0; CM_WINDOW_LEN],
            acc_z: vec![0.0; ACC_WINDOW_LEN],
            start_time,
            participant_id: String::new(),
            activity: Activity::Unspecified,
        }
    }

    pub fn cm(&self) -> &[f64] {
        &self.cm
    }

    pub fn acc_z(&self) -> &[f64] {
        &self.acc_z
    }

    pub fn midpoint(&self) -> f64 {
        self.start_time + 0.5
    }
}

/// Windows the common span of the two channels.
pub fn window_stream(
    cm: &TimeSeries,
    acc: &TimeSeries,
    config: &WindowConfig,
) -> Result<Vec<SensorWindow>, SignalError> {
    let (cm_start, cm_end) = cm.span().ok_or(SignalError::AllMissing)?;
    let (acc_start, acc_end) = acc.span().ok_or(SignalError::AllMissing)?;
    window_range(
        cm,
        acc,
        cm_start.max(acc_start),
        cm_end.min(acc_end),
        config,
    )
}

/// Windows `[start_s, end_s)` at `config.stride_s`, dropping the trailing
/// partial window. Each window is resampled onto exactly 8000 / 400 uniform
/// points by linear interpolation of the gap-filled channels.
pub fn window_range(
    cm: &TimeSeries,
    acc: &TimeSeries,
    start_s: f64,
    end_s: f64,
    config: &WindowConfig,
) -> Result<Vec<SensorWindow>, SignalError> {
    config.check_stride(Channel::ContactMic.nominal_rate_hz())?;
    config.check_stride(Channel::AccelZ.nominal_rate_hz())?;
    let span = end_s - start_s;
    let count = config.count(span);
    if count == 0 {
        return Err(SignalError::DurationTooShort {
            span_s: span.max(0.0),
            window_s: config.window_s,
        });
    }
    let cm = cm.interpolated()?;
    let acc = acc.interpolated()?;
    let cm_rate = Channel::ContactMic.nominal_rate_hz();
    let acc_rate = Channel::AccelZ.nominal_rate_hz();

    (0..count)
        .map(|k| {
            let w_start = start_s + k as f64 * config.stride_s;
            let cm_vals = resample(&cm, w_start, cm_rate, CM_WINDOW_LEN);
            let acc_vals = resample(&acc, w_start, acc_rate, ACC_WINDOW_LEN);
            SensorWindow::new(cm_vals, acc_vals, w_start, "", Activity::Unspecified)
        })
        .collect()
}

/// Values of a gap-free series at `start + i / rate`, `i < n`. Points before
/// the first or after the last sample take the edge value.
fn resample(series: &TimeSeries, start: f64, rate: f64, n: usize) -> Vec<f64> {
    let ts = series.timestamps();
    let vs = series.values();
    let mut out = Vec::with_capacity(n);
    // index of the first sample with t > target
    let mut hi = ts.partition_point(|&t| t <= start);
    for i in 0..n {
        let target = start + i as f64 / rate;
        while hi < ts.len() && ts[hi] <= target {
            hi += 1;
        }
        let v = if hi == 0 {
            vs[0]
        } else if hi == ts.len() {
            vs[ts.len() - 1]
        } else {
            let lo = hi - 1;
            let (t0, t1) = (ts[lo], ts[hi]);
            // Snap to the sample when the grid lands on it up to rounding.
            if (target - t0).abs() <= 1e-9 / rate {
                vs[lo]
            } else {
                vs[lo] + (vs[hi] - vs[lo]) * (target - t0) / (t1 - t0)
            }
        };
        out.push(v);
    }
    out
}
