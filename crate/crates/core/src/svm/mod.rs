//! Soft-margin support vector classification trained with SMO.
//!
//! Decision function: `f(x) = Σ alpha_i·y_i·k(x_i, x) + b`. With a linear
//! kernel this is `w·x + b` with `w = Σ alpha_i·y_i·x_i`; the margin is
//! `1/‖w‖` and the two classification boundaries `f = ±1` sit `2/‖w‖`
//! apart.

mod kernel;
mod model;
mod oracle;
mod smo;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use kernel::Kernel;
pub use model::SvmModel;
pub use oracle::{qp_oracle, DualSolution, ORACLE_MAX_SAMPLES};
pub use smo::{train_smo, TrainConfig};

/// A feature vector; all entries finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Sample(pub Vec<f64>);

impl Sample {
    pub fn new(features: Vec<f64>) -> Result<Self> {
        if let Some(i) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "feature {i} is not finite ({})",
                features[i]
            )));
        }
        Ok(Sample(features))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for Sample {
    fn from(v: Vec<f64>) -> Self {
        Sample(v)
    }
}

/// Binary class. `Normal` is class 0 (`y = -1`), `Fraudulent` is class 1 (`y = +1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Normal,
    Fraudulent,
}

impl Label {
    pub fn sign(self) -> f64 {
        match self {
            Label::Normal => -1.0,
            Label::Fraudulent => 1.0,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Label::Normal => -1,
            Label::Fraudulent => 1,
        }
    }

    pub fn from_i8(v: i8) -> Result<Self> {
        match v {
            -1 => Ok(Label::Normal),
            1 => Ok(Label::Fraudulent),
            other => Err(Error::InvalidInput(format!(
                "label must be -1 or +1, got {other}"
            ))),
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Label::Normal => Label::Fraudulent,
            Label::Fraudulent => Label::Normal,
        }
    }
}

impl Serialize for Label {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_i8(self.as_i8())
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = i8::deserialize(d)?;
        Label::from_i8(v).map_err(serde::de::Error::custom)
    }
}

pub(crate) fn check_dims(samples: &[Sample]) -> Result<usize> {
    let dim = samples.first().map(Sample::dim).unwrap_or(0);
    for (i, s) in samples.iter().enumerate() {
        if s.dim() != dim {
            return Err(Error::InvalidInput(format!(
                "sample {i} has dimension {}, expected {dim}",
                s.dim()
            )));
        }
        if s.0.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("sample {i} has a non-finite feature")));
        }
    }
    Ok(dim)
}

/// Shared training-set validation for SMO and the oracle.
pub(crate) fn check_training_set(samples: &[Sample], labels: &[Label]) -> Result<usize> {
    if samples.len() != labels.len() {
        return Err(Error::InvalidInput(format!(
            "{} samples but {} labels",
            samples.len(),
            labels.len()
        )));
    }
    let dim = check_dims(samples)?;
    let has_pos = labels.contains(&Label::Fraudulent);
    let has_neg = labels.contains(&Label::Normal);
    if !(has_pos && has_neg) {
        return Err(Error::DegenerateLabels);
    }
    Ok(dim)
}

/// Dual objective `Σ alpha_i − ½ Σ_ij alpha_i alpha_j y_i y_j k(x_i, x_j)`.
pub fn dual_objective(kernel: &Kernel, samples: &[Sample], labels: &[Label], alphas: &[f64]) -> Result<f64> {
    let mut quad = 0.0;
    for i in 0..samples.len() {
        if alphas[i] == 0.0 {
            continue;
        }
        for j in 0..samples.len() {
            if alphas[j] == 0.0 {
                continue;
            }
            quad += alphas[i]
                * alphas[j]
                * labels[i].sign()
                * labels[j].sign()
                * kernel.eval(&samples[i], &samples[j])?;
        }
    }
    Ok(alphas.iter().sum::<f64>() - 0.5 * quad)
}

/// Bias from dual variables and kernel sums `g_i = Σ_j alpha_j y_j k(x_j, x_i)`.
///
/// Averages `y_i − g_i` over free variables (`0 < alpha < c`); with none free
/// it takes the midpoint of the interval the KKT conditions leave for `b`.
pub(crate) fn bias_from_gradient(alphas: &[f64], labels: &[Label], g: &[f64], c: f64, eps: f64) -> f64 {
    let mut sum = 0.0;
    let mut free = 0usize;
    let mut lower = f64::NEG_INFINITY;
    let mut upper = f64::INFINITY;
    for i in 0..alphas.len() {
        let y = labels[i].sign();
        let r = y - g[i];
        let at_lower = alphas[i] <= eps;
        let at_upper = alphas[i] >= c - eps;
        if !at_lower && !at_upper {
            sum += r;
            free += 1;
        } else if (at_lower && y > 0.0) || (at_upper && y < 0.0) {
            lower = lower.max(r);
        } else {
            upper = upper.min(r);
        }
    }
    if free > 0 {
        return sum / free as f64;
    }
    match (lower.is_finite(), upper.is_finite()) {
        (true, true) => 0.5 * (lower + upper),
        (true, false) => lower,
        (false, true) => upper,
        (false, false) => 0.0,
    }
}

/// Standard C-SVM KKT violation of one point given its margin `y·f(x)`.
pub(crate) fn point_violation(alpha: f64, yf: f64, c: f64, eps: f64) -> f64 {
    if alpha <= eps {
        (1.0 - yf).max(0.0)
    } else if alpha >= c - eps {
        (yf - 1.0).max(0.0)
    } else {
        (yf - 1.0).abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_serde_uses_signed_integers() {
        assert_eq!(serde_json::to_string(&Label::Normal).unwrap(), "-1");
        assert_eq!(serde_json::from_str::<Label>("1").unwrap(), Label::Fraudulent);
        assert!(serde_json::from_str::<Label>("0").is_err());
    }

    #[test]
    fn bias_midpoint_when_nothing_free() {
        // +1 at alpha=0 with g=0.5 needs b >= 0.5; -1 at alpha=0 with g=-2 needs b <= 1.
        let b = bias_from_gradient(
            &[0.0, 0.0],
            &[Label::Fraudulent, Label::Normal],
            &[0.5, -2.0],
            1.0,
            1e-8,
        );
        assert!((b - 0.75).abs() < 1e-15);
    }

    #[test]
    fn sample_rejects_nan() {
        assert!(Sample::new(vec![1.0, f64::NAN]).is_err());
    }
}
