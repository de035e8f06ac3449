use serde::{Deserialize, Serialize};

use super::PolicyError;

/// Running per-feature mean/variance with clipping, updated during training
/// and frozen afterwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObsNormalizer {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
    pub count: f64,
    pub clip: f64,
    pub epsilon: f64,
}

impl ObsNormalizer {
    pub fn new(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            var: vec![1.0; dim],
            count: 1e-4,
            clip: 10.0,
            epsilon: 1e-8,
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Folds one observation into the statistics (parallel-variance merge).
    pub fn update(&mut self, x: &[f64]) -> Result<(), PolicyError> {
        if x.len() != self.dim() {
            return Err(PolicyError::ObservationLength {
                expected: self.dim(),
                found: x.len(),
            });
        }
        let total = self.count + 1.0;
        for ((m, v), &xi) in self.mean.iter_mut().zip(self.var.iter_mut()).zip(x) {
            let delta = xi - *m;
            let m2 = *v * self.count + delta * delta * self.count / total;
            *m += delta / total;
            *v = m2 / total;
        }
        self.count = total;
        Ok(())
    }

    pub fn normalize(&self, x: &[f64]) -> Result<Vec<f64>, PolicyError> {
        if x.len() != self.dim() {
            return Err(PolicyError::ObservationLength {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(x.iter()
            .zip(self.mean.iter().zip(&self.var))
            .map(|(xi, (m, v))| ((xi - m) / (v + self.epsilon).sqrt()).clamp(-self.clip, self.clip))
            .collect())
    }
}
