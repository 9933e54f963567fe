use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{check_dims, point_violation, Kernel, Label, Sample, TrainConfig};
use crate::error::{Error, Result};

/// A trained classifier. Only samples with nonzero dual coefficient are kept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub kernel: Kernel,
    pub support_samples: Vec<Sample>,
    pub support_labels: Vec<Label>,
    pub alphas: Vec<f64>,
    pub bias: f64,
}

impl SvmModel {
    pub fn dim(&self) -> Option<usize> {
        self.support_samples.first().map(Sample::dim)
    }

    /// Checks structural consistency of a model that came from outside the trainer.
    pub fn validate(&self) -> Result<()> {
        self.kernel.validate()?;
        let n = self.support_samples.len();
        if self.support_labels.len() != n || self.alphas.len() != n {
            return Err(Error::InvalidInput(format!(
                "model has {n} support samples, {} labels, {} alphas",
                self.support_labels.len(),
                self.alphas.len()
            )));
        }
        check_dims(&self.support_samples)?;
        if self.alphas.iter().any(|a| !(a.is_finite() && *a > 0.0)) || !self.bias.is_finite() {
            return Err(Error::InvalidInput(
                "model alphas must be finite and positive, bias finite".into(),
            ));
        }
        Ok(())
    }

    fn check_dim(&self, x: &Sample) -> Result<()> {
        match self.dim() {
            Some(d) if d != x.dim() => Err(Error::InvalidInput(format!(
                "sample has dimension {}, model expects {d}",
                x.dim()
            ))),
            _ => Ok(()),
        }
    }

    /// `Σ alpha_i·y_i·k(x_i, x)` without the bias.
    fn kernel_sum(&self, x: &[f64]) -> f64 {
        self.support_samples
            .iter()
            .zip(&self.support_labels)
            .zip(&self.alphas)
            .map(|((sv, y), a)| a * y.sign() * self.kernel.eval_unchecked(sv.as_slice(), x))
            .sum()
    }

    pub fn decision_value(&self, x: &Sample) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.kernel_sum(x.as_slice()) + self.bias)
    }

    /// Sign of the decision value; exactly zero goes to [`Label::Fraudulent`].
    pub fn classify(&self, x: &Sample) -> Result<Label> {
        Ok(label_for(self.decision_value(x)?))
    }

    /// `‖w‖² = Σ_ij alpha_i alpha_j y_i y_j k(x_i, x_j)`.
    pub fn weight_norm_sq(&self) -> f64 {
        self.support_samples
            .iter()
            .zip(&self.support_labels)
            .zip(&self.alphas)
            .map(|((sv, y), a)| a * y.sign() * self.kernel_sum(sv.as_slice()))
            .sum()
    }

    /// Distance `1/‖w‖` from the hyperplane to either classification boundary.
    pub fn margin(&self, value_eps: f64) -> Result<f64> {
        let norm_sq = self.weight_norm_sq();
        if !(norm_sq > value_eps) {
            return Err(Error::DegenerateModel(format!(
                "‖w‖² = {norm_sq:e} is not positive"
            )));
        }
        Ok(1.0 / norm_sq.sqrt())
    }

    /// `w = Σ alpha_i·y_i·x_i`; only defined for the linear kernel.
    pub fn primal_weights(&self) -> Result<Vec<f64>> {
        if self.kernel != Kernel::Linear {
            return Err(Error::Unsupported(
                "primal weights exist only for the linear kernel".into(),
            ));
        }
        let mut w = vec![0.0; self.dim().unwrap_or(0)];
        for ((sv, y), a) in self
            .support_samples
            .iter()
            .zip(&self.support_labels)
            .zip(&self.alphas)
        {
            for (wk, xk) in w.iter_mut().zip(sv.as_slice()) {
                *wk += a * y.sign() * xk;
            }
        }
        Ok(w)
    }

    /// `Σ alpha_i·y_i`; zero for a dual-feasible model.
    pub fn equality_residual(&self) -> f64 {
        self.alphas
            .iter()
            .zip(&self.support_labels)
            .map(|(a, y)| a * y.sign())
            .sum()
    }

    /// Maximum C-SVM KKT violation over a training set.
    ///
    /// Dual coefficients of training points are recovered by matching them
    /// against the stored support samples; unmatched points have alpha = 0.
    /// An empty set gives 0.
    pub fn kkt_violation(&self, samples: &[Sample], labels: &[Label], config: &TrainConfig) -> Result<f64> {
        if samples.len() != labels.len() {
            return Err(Error::InvalidInput(format!(
                "{} samples but {} labels",
                samples.len(),
                labels.len()
            )));
        }
        let mut pool: HashMap<(Vec<u64>, Label), Vec<f64>> = HashMap::new();
        for ((sv, y), a) in self
            .support_samples
            .iter()
            .zip(&self.support_labels)
            .zip(&self.alphas)
        {
            pool.entry((bits(sv), *y)).or_default().push(*a);
        }
        for v in pool.values_mut() {
            v.reverse();
        }

        let mut worst: f64 = 0.0;
        for (x, y) in samples.iter().zip(labels) {
            let f = self.decision_value(x)?;
            let alpha = pool
                .get_mut(&(bits(x), *y))
                .and_then(Vec::pop)
                .unwrap_or(0.0);
            worst = worst.max(point_violation(alpha, y.sign() * f, config.c, config.value_eps));
        }
        Ok(worst)
    }
}

pub(crate) fn label_for(decision: f64) -> Label {
    if decision >= 0.0 {
        Label::Fraudulent
    } else {
        Label::Normal
    }
}

fn bits(x: &Sample) -> Vec<u64> {
    x.as_slice().iter().map(|v| v.to_bits()).collect()
}
