//! Fully connected networks: ReLU hidden layers with inverted dropout, an
//! identity or sigmoid output unit, MAE / BCE losses and Adam.
//!
//! Everything runs in `f64` on the CPU, single-threaded, so a fixed seed
//! gives bit-identical weights.

mod adam;
mod config;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spectral::MinMaxScaler;

pub use adam::{adam_update, Adam, AdamParams};
pub use config::{LossKind, MlpConfig, OutputActivation};

/// Probability clip applied inside the cross-entropy.
pub const BCE_EPS: f64 = 1e-7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MlpError {
    #[error("input has {actual} features, network expects {expected}")]
    ShapeMismatch { expected: usize, actual: usize },
    #[error("empty batch")]
    EmptyBatch,
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error("prediction and target lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("loss became non-finite in epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

/// Weights are stored row-major as `outputs × inputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    fn glorot(inputs: usize, outputs: usize, rng: &mut ChaCha8Rng) -> Self {
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        let dist = Uniform::new_inclusive(-limit, limit).expect("finite limit");
        Self {
            inputs,
            outputs,
            weights: (0..inputs * outputs).map(|_| dist.sample(rng)).collect(),
            bias: vec![0.0; outputs],
        }
    }

    /// `out[b, o] = bias[o] + Σ_i x[b, i] · w[o, i]`
    fn affine(&self, x: &[f64], batch: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(batch * self.outputs);
        for row in x.chunks_exact(self.inputs).take(batch) {
            for (w, b) in self.weights.chunks_exact(self.inputs).zip(&self.bias) {
                out.push(b + dot(row, w));
            }
        }
        out
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub eval_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub config: MlpConfig,
    pub layers: Vec<Dense>,
    pub scaler: Option<MinMaxScaler>,
    pub history: Vec<EpochRecord>,
}

/// Gradients laid out like [`MlpModel::layers`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Dense>,
}

/// Cached activations of one batch forward pass.
struct Tape {
    batch: usize,
    input: Vec<f64>,
    /// Pre-activations of each hidden layer.
    hidden_z: Vec<Vec<f64>>,
    /// Dropout scale per hidden unit (0 or 1/(1-p)); empty in infer mode.
    masks: Vec<Vec<f64>>,
    /// Post-ReLU, post-dropout outputs of each hidden layer.
    hidden_a: Vec<Vec<f64>>,
    output: Vec<f64>,
}

impl MlpModel {
    /// Glorot-uniform weights and zero biases from `config.seed`.
    pub fn new(config: MlpConfig) -> Result<Self, MlpError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let layers = config
            .layer_sizes
            .windows(2)
            .map(|w| Dense::glorot(w[0], w[1], &mut rng))
            .collect();
        Ok(Self {
            config,
            layers,
            scaler: None,
            history: Vec::new(),
        })
    }

    pub fn from_layers(config: MlpConfig, layers: Vec<Dense>) -> Result<Self, MlpError> {
        config.validate()?;
        let shapes_ok = layers.len() + 1 == config.layer_sizes.len()
            && layers.iter().zip(config.layer_sizes.windows(2)).all(|(l, w)| {
                l.inputs == w[0]
                    && l.outputs == w[1]
                    && l.weights.len() == w[0] * w[1]
                    && l.bias.len() == w[1]
            });
        if !shapes_ok {
            return Err(MlpError::InvalidConfig(
                "layer shapes do not match layer_sizes".into(),
            ));
        }
        Ok(Self {
            config,
            layers,
            scaler: None,
            history: Vec::new(),
        })
    }

    pub fn input_size(&self) -> usize {
        self.config.layer_sizes[0]
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    /// Single-example forward pass. `Infer` never applies dropout and does
    /// not touch `rng`.
    pub fn forward<R: Rng + ?Sized>(&self, x: &[f64], mode: Mode, rng: &mut R) -> Result<f64, MlpError> {
        self.check_width(x.len())?;
        let tape = match mode {
            Mode::Train => self.run(x, 1, Some(rng)),
            Mode::Infer => self.run::<R>(x, 1, None),
        };
        Ok(tape.output[0])
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64, MlpError> {
        self.check_width(x.len())?;
        Ok(self.run::<ChaCha8Rng>(x, 1, None).output[0])
    }

    /// Inference over many rows, in chunks to bound memory.
    pub fn predict_batch<T: AsRef<[f64]>>(&self, rows: &[T]) -> Result<Vec<f64>, MlpError> {
        let width = self.input_size();
        let mut out = Vec::with_capacity(rows.len());
        for chunk in rows.chunks(256) {
            let mut flat = Vec::with_capacity(chunk.len() * width);
            for r in chunk {
                self.check_width(r.as_ref().len())?;
                flat.extend_from_slice(r.as_ref());
            }
            out.extend(self.run::<ChaCha8Rng>(&flat, chunk.len(), None).output);
        }
        Ok(out)
    }

    fn check_width(&self, actual: usize) -> Result<(), MlpError> {
        if actual != self.input_size() {
            return Err(MlpError::ShapeMismatch {
                expected: self.input_size(),
                actual,
            });
        }
        Ok(())
    }

    fn run<R: Rng + ?Sized>(&self, input: &[f64], batch: usize, mut dropout: Option<&mut R>) -> Tape {
        let p = self.config.dropout_p;
        let keep_scale = 1.0 / (1.0 - p);
        let n_hidden = self.layers.len() - 1;
        let mut hidden_z = Vec::with_capacity(n_hidden);
        let mut hidden_a: Vec<Vec<f64>> = Vec::with_capacity(n_hidden);
        let mut masks = Vec::new();

        for layer in &self.layers[..n_hidden] {
            let prev = hidden_a.last().map_or(input, |a| a.as_slice());
            let z = layer.affine(prev, batch);
            let mut a: Vec<f64> = z.iter().map(|&v| v.max(0.0)).collect();
            if let Some(rng) = dropout.as_deref_mut() {
                if p > 0.0 {
                    let mask: Vec<f64> = (0..a.len())
                        .map(|_| if rng.random::<f64>() < p { 0.0 } else { keep_scale })
                        .collect();
                    a.iter_mut().zip(&mask).for_each(|(v, m)| *v *= m);
                    masks.push(mask);
                }
            }
            hidden_z.push(z);
            hidden_a.push(a);
        }
        let last = self.layers.last().expect("at least one layer");
        let prev = hidden_a.last().map_or(input, |a| a.as_slice());
        let mut output = last.affine(prev, batch);
        if self.config.output_activation == OutputActivation::Sigmoid {
            output.iter_mut().for_each(|v| *v = sigmoid(*v));
        }
        Tape {
            batch,
            input: input.to_vec(),
            hidden_z,
            masks,
            hidden_a,
            output,
        }
    }

    /// Mean loss over a batch and its exact gradient. With `dropout` set the
    /// pass runs in training mode and the sampled masks are used in the
    /// backward pass.
    pub fn compute_gradients<R: Rng + ?Sized>(
        &self,
        xs: &[f64],
        ys: &[f64],
        dropout: Option<&mut R>,
    ) -> Result<(f64, Gradients), MlpError> {
        let batch = ys.len();
        if batch == 0 {
            return Err(MlpError::EmptyBatch);
        }
        if xs.len() != batch * self.input_size() {
            return Err(MlpError::ShapeMismatch {
                expected: batch * self.input_size(),
                actual: xs.len(),
            });
        }
        let tape = self.run(xs, batch, dropout);
        let value = loss(&tape.output, ys, self.config.loss)?;
        let delta = self.output_delta(&tape.output, ys);
        Ok((value, self.backward(&tape, delta)))
    }

    /// d(loss)/d(output pre-activation) per example.
    fn output_delta(&self, out: &[f64], ys: &[f64]) -> Vec<f64> {
        let n = ys.len() as f64;
        let sig = self.config.output_activation == OutputActivation::Sigmoid;
        out.iter()
            .zip(ys)
            .map(|(&p, &y)| match (self.config.loss, sig) {
                (LossKind::Mae, false) => mae_subgradient(p - y) / n,
                (LossKind::Mae, true) => mae_subgradient(p - y) * p * (1.0 - p) / n,
                // Sigmoid and cross-entropy combine to (p - y); this is the
                // exact derivative wherever p lies inside the clip band.
                (LossKind::Bce, true) => (p - y) / n,
                (LossKind::Bce, false) => {
                    if p <= BCE_EPS || p >= 1.0 - BCE_EPS {
                        0.0
                    } else {
                        (-(y / p) + (1.0 - y) / (1.0 - p)) / n
                    }
                }
            })
            .collect()
    }

    fn backward(&self, tape: &Tape, mut delta: Vec<f64>) -> Gradients {
        let batch = tape.batch;
        let mut grads: Vec<Dense> = self
            .layers
            .iter()
            .map(|l| Dense::zeros(l.inputs, l.outputs))
            .collect();

        for li in (0..self.layers.len()).rev() {
            let layer = &self.layers[li];
            let input = if li == 0 {
                &tape.input
            } else {
                &tape.hidden_a[li - 1]
            };
            let g = &mut grads[li];
            for b in 0..batch {
                let x = &input[b * layer.inputs..(b + 1) * layer.inputs];
                let d = &delta[b * layer.outputs..(b + 1) * layer.outputs];
                for (o, &dv) in d.iter().enumerate() {
                    if dv == 0.0 {
                        continue;
                    }
                    g.bias[o] += dv;
                    let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    row.iter_mut().zip(x).for_each(|(w, xi)| *w += dv * xi);
                }
            }
            if li == 0 {
                break;
            }
            // Propagate to the previous hidden layer's pre-activation.
            let prev = li - 1;
            let mut next = vec![0.0; batch * layer.inputs];
            for b in 0..batch {
                let d = &delta[b * layer.outputs..(b + 1) * layer.outputs];
                let acc = &mut next[b * layer.inputs..(b + 1) * layer.inputs];
                for (o, &dv) in d.iter().enumerate() {
                    if dv == 0.0 {
                        continue;
                    }
                    let w = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    acc.iter_mut().zip(w).for_each(|(a, wi)| *a += dv * wi);
                }
            }
            let z = &tape.hidden_z[prev];
            let mask = tape.masks.get(prev);
            for (i, v) in next.iter_mut().enumerate() {
                if z[i] <= 0.0 {
                    *v = 0.0;
                } else if let Some(m) = mask {
                    *v *= m[i];
                }
            }
            delta = next;
        }
        Gradients { layers: grads }
    }
}

fn mae_subgradient(residual: f64) -> f64 {
    if residual > 0.0 {
        1.0
    } else if residual < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Mean absolute error or binary cross-entropy (probabilities clipped to
/// `[BCE_EPS, 1 - BCE_EPS]`).
pub fn loss(pred: &[f64], target: &[f64], kind: LossKind) -> Result<f64, MlpError> {
    if pred.len() != target.len() {
        return Err(MlpError::LengthMismatch(pred.len(), target.len()));
    }
    if pred.is_empty() {
        return Err(MlpError::EmptyBatch);
    }
    let n = pred.len() as f64;
    let total: f64 = match kind {
        LossKind::Mae => pred.iter().zip(target).map(|(p, y)| (p - y).abs()).sum(),
        LossKind::Bce => pred
            .iter()
            .zip(target)
            .map(|(&p, &y)| {
                let p = p.clamp(BCE_EPS, 1.0 - BCE_EPS);
                -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
            })
            .sum(),
    };
    Ok(total / n)
}

/// Mini-batch training for a fixed number of epochs. Rows must already be
/// normalized. Batches are reshuffled every epoch from the config seed.
pub fn train<T: AsRef<[f64]>>(
    config: &MlpConfig,
    xs: &[T],
    ys: &[f64],
    eval: Option<(&[T], &[f64])>,
) -> Result<MlpModel, MlpError> {
    if xs.is_empty() {
        return Err(MlpError::EmptyTrainingSet);
    }
    if xs.len() != ys.len() {
        return Err(MlpError::LengthMismatch(xs.len(), ys.len()));
    }
    let mut model = MlpModel::new(config.clone())?;
    let width = model.input_size();
    for row in xs {
        model.check_width(row.as_ref().len())?;
    }
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5348_5546);
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x4452_4f50);
    let mut adam = Adam::new(config.adam_params());
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let mut flat = Vec::with_capacity(config.batch_size * width);
    let mut targets = Vec::with_capacity(config.batch_size);

    for epoch in 0..config.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut weighted = 0.0;
        for chunk in order.chunks(config.batch_size) {
            flat.clear();
            targets.clear();
            for &i in chunk {
                flat.extend_from_slice(xs[i].as_ref());
                targets.push(ys[i]);
            }
            let (value, grads) = model.compute_gradients(&flat, &targets, Some(&mut dropout_rng))?;
            if !value.is_finite() {
                return Err(MlpError::NonFiniteLoss { epoch });
            }
            weighted += value * chunk.len() as f64;
            adam.step_model(&mut model.layers, &grads);
        }
        let eval_loss = match eval {
            Some((ex, ey)) if !ey.is_empty() => {
                let pred = model.predict_batch(ex)?;
                Some(loss(&pred, ey, config.loss)?)
            }
            _ => None,
        };
        let train_loss = weighted / xs.len() as f64;
        if !train_loss.is_finite() || eval_loss.is_some_and(|v| !v.is_finite()) {
            return Err(MlpError::NonFiniteLoss { epoch });
        }
        model.history.push(EpochRecord {
            epoch,
            train_loss,
            eval_loss,
        });
    }
    Ok(model)
}
