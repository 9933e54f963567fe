use serde::{Deserialize, Serialize};

use super::Sample;
use crate::error::{Error, Result};

/// Kernel replacing the dot product in the decision function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Kernel {
    Linear,
    /// `(a·b + offset)^degree`
    Polynomial { degree: u32, offset: f64 },
    /// `exp(−gamma·‖a − b‖²)`
    Rbf { gamma: f64 },
}

impl Kernel {
    /// RBF kernel with the conventional `gamma = 1/dim`.
    pub fn default_rbf(dim: usize) -> Self {
        Kernel::Rbf {
            gamma: 1.0 / dim.max(1) as f64,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Kernel::Linear => Ok(()),
            Kernel::Polynomial { degree, offset } => {
                if degree < 1 {
                    Err(Error::InvalidInput("polynomial degree must be >= 1".into()))
                } else if !(offset >= 0.0 && offset.is_finite()) {
                    Err(Error::InvalidInput("polynomial offset must be finite and >= 0".into()))
                } else {
                    Ok(())
                }
            }
            Kernel::Rbf { gamma } => {
                if gamma > 0.0 && gamma.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidInput("rbf gamma must be finite and > 0".into()))
                }
            }
        }
    }

    pub fn eval(&self, a: &Sample, b: &Sample) -> Result<f64> {
        self.eval_slices(a.as_slice(), b.as_slice())
    }

    pub fn eval_slices(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        if a.len() != b.len() {
            return Err(Error::InvalidInput(format!(
                "kernel dimension mismatch: {} vs {}",
                a.len(),
                b.len()
            )));
        }
        Ok(self.eval_unchecked(a, b))
    }

    pub(crate) fn eval_unchecked(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Kernel::Linear => dot(a, b),
            Kernel::Polynomial { degree, offset } => (dot(a, b) + offset).powi(degree as i32),
            Kernel::Rbf { gamma } => {
                // Summation order is symmetric in (a, b) so k(a,b) == k(b,a) exactly.
                let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * sq).exp()
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
