use super::EvalError;

/// Top of the power scale, mW.
pub const POWER_SCALE_MAX_MW: f64 = 600.0;

fn check_pair(y: &[f64], y_hat: &[f64]) -> Result<(), EvalError> {
    if y.len() != y_hat.len() {
        return Err(EvalError::LengthMismatch(y.len(), y_hat.len()));
    }
    if y.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    Ok(())
}

fn abs_error_sum(y: &[f64], y_hat: &[f64]) -> f64 {
    y.iter().zip(y_hat).map(|(a, b)| (a - b).abs()).sum()
}

/// Mean absolute error, in the units of the inputs.
pub fn mae(y: &[f64], y_hat: &[f64]) -> Result<f64, EvalError> {
    check_pair(y, y_hat)?;
    Ok(abs_error_sum(y, y_hat) / y.len() as f64)
}

/// Absolute error as a percentage of the fixed 600 mW scale, not of each label.
pub fn mape(y: &[f64], y_hat: &[f64]) -> Result<f64, EvalError> {
    Ok(mae(y, y_hat)? / POWER_SCALE_MAX_MW * 100.0)
}

/// Percentage of probabilities on the correct side of 0.5.
pub fn accuracy(probs: &[f64], targets: &[f64]) -> Result<f64, EvalError> {
    check_pair(targets, probs)?;
    let correct = probs
        .iter()
        .zip(targets)
        .filter(|(p, t)| (**p >= 0.5) == (**t >= 0.5))
        .count();
    Ok(100.0 * correct as f64 / probs.len() as f64)
}

/// Predicts the training-label mean for every input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NaiveBaseline {
    pub mean: f64,
}

impl NaiveBaseline {
    pub fn fit(labels: &[f64]) -> Result<Self, EvalError> {
        if labels.is_empty() {
            return Err(EvalError::EmptyInput);
        }
        Ok(Self {
            mean: labels.iter().sum::<f64>() / labels.len() as f64,
        })
    }

    pub fn predict(&self) -> f64 {
        self.mean
    }
}

/// 0-10 units by dividing mW by 60.
pub fn to_vas_linear(power_mw: f64) -> Result<f64, EvalError> {
    if power_mw < 0.0 || power_mw.is_nan() {
        return Err(EvalError::NegativePower(power_mw));
    }
    Ok(power_mw / 60.0)
}

/// 0-10 units via `10·√(p/600)`.
pub fn to_vas_sqrt(power_mw: f64) -> Result<f64, EvalError> {
    if power_mw < 0.0 || power_mw.is_nan() {
        return Err(EvalError::NegativePower(power_mw));
    }
    Ok(10.0 * (power_mw / POWER_SCALE_MAX_MW).sqrt())
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len().is_multiple_of(2) {
        0.5 * (v[mid - 1] + v[mid])
    } else {
        v[mid]
    }
}
