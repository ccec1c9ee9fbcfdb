//! Named parameters, initialization, and the Adam optimizer.

use super::Tensor;
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TensorError {
    #[error("parameter '{name}' has no gradient")]
    MissingGradient { name: String },
    #[error("parameter '{name}' became non-finite")]
    NonFiniteParameter { name: String },
}

/// A named tensor with `requires_grad` set, kept finite at all times.
#[derive(Clone)]
pub struct Parameter {
    name: String,
    tensor: Tensor,
}

impl Parameter {
    pub fn new(name: impl Into<String>, tensor: Tensor) -> Parameter {
        assert!(tensor.requires_grad(), "parameters must require gradients");
        Parameter {
            name: name.into(),
            tensor,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn tensor(&self) -> &Tensor {
        &self.tensor
    }

    pub fn shape(&self) -> &[usize] {
        self.tensor.shape()
    }

    pub fn len(&self) -> usize {
        self.tensor.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensor.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        self.tensor.values()
    }

    pub fn set_values(&self, values: &[f64]) {
        self.tensor.set_values(values);
    }
}

impl std::fmt::Debug for Parameter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Parameter")
            .field("name", &self.name)
            .field("shape", &self.tensor.shape())
            .finish()
    }
}

/// Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) initialization for embeddings
/// and linear weights.
pub fn uniform_init(
    name: impl Into<String>,
    shape: Vec<usize>,
    fan_in: usize,
    rng: &mut impl Rng,
) -> Parameter {
    let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
    let len = shape.iter().product();
    let values: Vec<f64> = (0..len).map(|_| rng.random_range(-bound..bound)).collect();
    Parameter::new(name, Tensor::variable(shape, values))
}

/// Zero initialization for biases.
pub fn zero_init(name: impl Into<String>, shape: Vec<usize>) -> Parameter {
    let len = shape.iter().product();
    Parameter::new(name, Tensor::variable(shape, vec![0.0; len]))
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> AdamConfig {
        AdamConfig {
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_learning_rate(learning_rate: f64) -> AdamConfig {
        AdamConfig {
            learning_rate,
            ..AdamConfig::default()
        }
    }
}

/// Per-parameter first/second moments plus the step counter.
pub struct AdamState {
    config: AdamConfig,
    step: u64,
    first_moment: Vec<Vec<f64>>,
    second_moment: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(config: AdamConfig, params: &[Parameter]) -> AdamState {
        AdamState {
            config,
            step: 0,
            first_moment: params.iter().map(|p| vec![0.0; p.len()]).collect(),
            second_moment: params.iter().map(|p| vec![0.0; p.len()]).collect(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One bias-corrected Adam update. Every parameter must carry a
    /// gradient; gradients are cleared afterwards.
    pub fn step(&mut self, params: &[Parameter]) -> Result<(), TensorError> {
        assert_eq!(params.len(), self.first_moment.len(), "parameter set changed");
        self.step += 1;
        let t = self.step as i32;
        let c = &self.config;
        let bias1 = 1.0 - c.beta1.powi(t);
        let bias2 = 1.0 - c.beta2.powi(t);
        for (index, param) in params.iter().enumerate() {
            let grad = param
                .tensor()
                .take_grad()
                .ok_or_else(|| TensorError::MissingGradient {
                    name: param.name().to_string(),
                })?;
            let m = &mut self.first_moment[index];
            let v = &mut self.second_moment[index];
            let mut values = param.values();
            for i in 0..grad.len() {
                m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * grad[i];
                v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * grad[i] * grad[i];
                let m_hat = m[i] / bias1;
                let v_hat = v[i] / bias2;
                values[i] -= c.learning_rate * m_hat / (v_hat.sqrt() + c.epsilon);
            }
            if values.iter().any(|x| !x.is_finite()) {
                return Err(TensorError::NonFiniteParameter {
                    name: param.name().to_string(),
                });
            }
            param.set_values(&values);
        }
        Ok(())
    }
}
