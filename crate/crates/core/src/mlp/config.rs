use serde::{Deserialize, Serialize};

use super::{AdamParams, MlpError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputActivation {
    Identity,
    Sigmoid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossKind {
    Mae,
    Bce,
}

/// Architecture and training recipe. Hidden layers always use ReLU.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpConfig {
    /// Input width, hidden widths..., output width (always 1).
    pub layer_sizes: Vec<usize>,
    pub output_activation: OutputActivation,
    pub dropout_p: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub loss: LossKind,
    pub seed: u64,
    #[serde(default = "default_beta1")]
    pub beta1: f64,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

fn default_beta1() -> f64 {
    AdamParams::default().beta1
}

fn default_beta2() -> f64 {
    AdamParams::default().beta2
}

fn default_epsilon() -> f64 {
    AdamParams::default().epsilon
}

impl MlpConfig {
    /// 575 → 1000 → 1000 → 1, linear output, MAE, dropout 0.1, lr 5e-6.
    pub fn intensity() -> Self {
        Self {
            layer_sizes: vec![575, 1000, 1000, 1],
            output_activation: OutputActivation::Identity,
            dropout_p: 0.1,
            learning_rate: 5e-6,
            batch_size: 64,
            epochs: 150,
            loss: LossKind::Mae,
            seed: 0,
            beta1: default_beta1(),
            beta2: default_beta2(),
            epsilon: default_epsilon(),
        }
    }

    /// 475 → 1200 → 1200 → 1200 → 1, sigmoid output, BCE, dropout 0.2, lr 1e-5.
    pub fn detection() -> Self {
        Self {
            layer_sizes: vec![475, 1200, 1200, 1200, 1],
            output_activation: OutputActivation::Sigmoid,
            dropout_p: 0.2,
            learning_rate: 1e-5,
            loss: LossKind::Bce,
            ..Self::intensity()
        }
    }

    pub fn adam_params(&self) -> AdamParams {
        AdamParams {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
        }
    }

    pub fn with_input_size(mut self, n: usize) -> Self {
        self.layer_sizes[0] = n;
        self
    }

    pub fn validate(&self) -> Result<(), MlpError> {
        let bad = |m: &str| Err(MlpError::InvalidConfig(m.to_string()));
        if self.layer_sizes.len() < 2 || self.layer_sizes.contains(&0) {
            return bad("layer_sizes needs at least input and output, all non-zero");
        }
        if self.layer_sizes.last() != Some(&1) {
            return bad("output layer must have exactly one unit");
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return bad("dropout_p must lie in [0, 1)");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("Adam betas must lie in [0, 1)");
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        Ok(())
    }

    /// Applies a `key=value` override. Values are parsed as JSON and must
    /// match the field's type; `hidden_sizes=a,b,c` replaces the hidden
    /// widths and keeps the input and output widths.
    pub fn apply_override(&mut self, spec: &str) -> Result<(), MlpError> {
        let (key, raw) = spec
            .split_once('=')
            .ok_or_else(|| MlpError::InvalidConfig(format!("override '{spec}' is not key=value")))?;
        let (key, raw) = (key.trim(), raw.trim());
        let mut next = self.clone();
        if key == "hidden_sizes" {
            let hidden: Result<Vec<usize>, _> = raw
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| s.trim().parse::<usize>())
                .collect();
            let hidden =
                hidden.map_err(|e| MlpError::InvalidConfig(format!("hidden_sizes: {e}")))?;
            let input = self.layer_sizes[0];
            next.layer_sizes = std::iter::once(input)
                .chain(hidden)
                .chain(std::iter::once(1))
                .collect();
        } else {
            let mut value = serde_json::to_value(&*self).expect("config serializes");
            let slot = value
                .get_mut(key)
                .ok_or_else(|| MlpError::InvalidConfig(format!("unknown key '{key}'")))?;
            *slot = serde_json::from_str(raw)
                .unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
            next = serde_json::from_value(value)
                .map_err(|e| MlpError::InvalidConfig(format!("{key}: {e}")))?;
        }
        next.validate()?;
        *self = next;
        Ok(())
    }
}
