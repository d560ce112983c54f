use serde::{Deserialize, Serialize};

use super::{Dense, Gradients};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamParams {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Bias-corrected Adam update of one tensor at step `t` (1-based).
pub fn adam_update(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    t: u64,
    hp: &AdamParams,
) {
    let c1 = 1.0 - hp.beta1.powi(t as i32);
    let c2 = 1.0 - hp.beta2.powi(t as i32);
    for i in 0..params.len() {
        let g = grads[i];
        m[i] = hp.beta1 * m[i] + (1.0 - hp.beta1) * g;
        v[i] = hp.beta2 * v[i] + (1.0 - hp.beta2) * g * g;
        let m_hat = m[i] / c1;
        let v_hat = v[i] / c2;
        params[i] -= hp.learning_rate * m_hat / (v_hat.sqrt() + hp.epsilon);
    }
}

/// Optimizer state: one pair of moment buffers per parameter tensor.
#[derive(Debug, Clone)]
pub struct Adam {
    pub params: AdamParams,
    step: u64,
    moments: Vec<(Vec<f64>, Vec<f64>)>,
}

impl Adam {
    pub fn new(params: AdamParams) -> Self {
        Self {
            params,
            step: 0,
            moments: Vec::new(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Updates every tensor once. Tensors must be passed in the same order
    /// on every call.
    pub fn step(&mut self, tensors: &mut [&mut [f64]], grads: &[&[f64]]) {
        assert_eq!(tensors.len(), grads.len(), "one gradient per tensor");
        if self.moments.is_empty() {
            self.moments = tensors
                .iter()
                .map(|t| (vec![0.0; t.len()], vec![0.0; t.len()]))
                .collect();
        }
        self.step += 1;
        for ((tensor, grad), (m, v)) in tensors.iter_mut().zip(grads).zip(&mut self.moments) {
            assert_eq!(tensor.len(), grad.len(), "gradient shape");
            adam_update(tensor, grad, m, v, self.step, &self.params);
        }
    }

    pub fn step_model(&mut self, layers: &mut [Dense], grads: &Gradients) {
        let mut tensors: Vec<&mut [f64]> = Vec::with_capacity(layers.len() * 2);
        for l in layers.iter_mut() {
            tensors.push(&mut l.weights);
            tensors.push(&mut l.bias);
        }
        let g: Vec<&[f64]> = grads
            .layers
            .iter()
            .flat_map(|l| [l.weights.as_slice(), l.bias.as_slice()])
            .collect();
        self.step(&mut tensors, &g);
    }
}
