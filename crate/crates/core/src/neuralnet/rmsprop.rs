use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RmsPropConfig {
    pub learning_rate: f64,
    pub decay: f64,
    pub epsilon: f64,
}

impl Default for RmsPropConfig {
    fn default() -> Self {
        RmsPropConfig {
            learning_rate: 1e-3,
            decay: 0.95,
            epsilon: 1e-8,
        }
    }
}

/// RMSProp with a lazily allocated squared-gradient accumulator:
///
/// ```text
/// acc   ← decay·acc + (1 − decay)·g²
/// param ← param − lr·g / √(acc + ε)
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct RmsProp {
    config: RmsPropConfig,
    acc: Vec<f64>,
}

impl RmsProp {
    pub fn new(config: RmsPropConfig) -> Self {
        RmsProp {
            config,
            acc: Vec::new(),
        }
    }

    pub fn config(&self) -> &RmsPropConfig {
        &self.config
    }

    pub fn accumulator(&self) -> &[f64] {
        &self.acc
    }

    pub fn update(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != grads.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} gradients", params.len()),
                got: grads.len().to_string(),
            });
        }
        if grads.iter().chain(params.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("optimizer input"));
        }
        if self.acc.is_empty() {
            self.acc = vec![0.0; params.len()];
        }
        let RmsPropConfig {
            learning_rate,
            decay,
            epsilon,
        } = self.config;
        for ((p, g), a) in params.iter_mut().zip(grads).zip(self.acc.iter_mut()) {
            *a = decay * *a + (1.0 - decay) * g * g;
            *p -= learning_rate * g / (*a + epsilon).sqrt();
        }
        Ok(())
    }
}
