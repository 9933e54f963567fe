//! Training and evaluation on seller data: feature extraction, scaling,
//! SMO, held-out splits and quality metrics.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{LabeledSeller, SellerHistory};
use crate::detection::{FraudVerdict, Verdict};
use crate::error::{Error, Result};
use crate::features::{apply_scaling, extract, fit_scaling, manifest};
use crate::model_file::ModelDocument;
use crate::svm::{train_smo, Kernel, Label, Sample, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub trained_on: usize,
    /// Sellers left out for lack of order history.
    pub skipped_cold_start: usize,
    pub support_vectors: usize,
    pub kkt_violation: f64,
}

/// Extracts features, fits scaling and trains the SVM. Sellers without
/// order history are excluded from training.
pub fn train_pipeline(
    sellers: &[LabeledSeller],
    kernel: Kernel,
    config: &TrainConfig,
) -> Result<(ModelDocument, TrainReport)> {
    let features: Vec<_> = sellers
        .iter()
        .map(|s| (extract(&s.history), s.label))
        .filter(|(f, _)| f.has_history)
        .collect();
    if features.is_empty() {
        return Err(Error::InvalidInput("no seller with order history to train on".into()));
    }
    let vectors: Vec<_> = features.iter().map(|(f, _)| *f).collect();
    let scaling = fit_scaling(&vectors)?;
    let samples: Vec<Sample> = vectors.iter().map(|f| apply_scaling(&scaling, f)).collect();
    let labels: Vec<Label> = features.iter().map(|(_, l)| *l).collect();
    let svm = train_smo(&samples, &labels, kernel, config)?;
    let report = TrainReport {
        trained_on: samples.len(),
        skipped_cold_start: sellers.len() - samples.len(),
        support_vectors: svm.alphas.len(),
        kkt_violation: svm.kkt_violation(&samples, &labels, config)?,
    };
    Ok((ModelDocument::pipeline(svm, *config, scaling, manifest()), report))
}

/// Kernel used when none is configured: RBF with gamma = 1/d.
pub fn default_kernel() -> Kernel {
    Kernel::default_rbf(manifest().len())
}

/// Stratified shuffle split; returns `(train, held_out)` with
/// `round(train_fraction · n)` of each class in `train`. Order within each
/// part follows the input.
pub fn holdout_split(
    sellers: &[LabeledSeller],
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<LabeledSeller>, Vec<LabeledSeller>)> {
    if !(0.0..=1.0).contains(&train_fraction) {
        return Err(Error::config(format!("train fraction {train_fraction} outside [0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_train = vec![false; sellers.len()];
    for class in [Label::Normal, Label::Fraudulent] {
        let mut idx: Vec<usize> = (0..sellers.len()).filter(|&i| sellers[i].label == class).collect();
        idx.shuffle(&mut rng);
        let k = (train_fraction * idx.len() as f64).round() as usize;
        for &i in &idx[..k] {
            in_train[i] = true;
        }
    }
    let (mut train, mut held) = (Vec::new(), Vec::new());
    for (s, t) in sellers.iter().zip(in_train) {
        if t { &mut train } else { &mut held }.push(s.clone());
    }
    Ok((train, held))
}

/// Quality of verdicts for the fraudulent class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub true_positives: usize,
    pub false_positives: usize,
    pub true_negatives: usize,
    pub false_negatives: usize,
    /// Sellers with an `InsufficientHistory` verdict, left out of the matrix.
    pub insufficient_history: usize,
    /// Undefined when nothing was flagged.
    pub precision: Option<f64>,
    /// Undefined when no scored seller is fraudulent.
    pub recall: Option<f64>,
}

pub fn evaluate(verdicts: &[FraudVerdict], labeled: &[(&SellerHistory, Label)]) -> Result<Metrics> {
    let truth: std::collections::HashMap<&str, Label> =
        labeled.iter().map(|(h, l)| (h.seller_id(), *l)).collect();
    let mut m = Metrics {
        true_positives: 0,
        false_positives: 0,
        true_negatives: 0,
        false_negatives: 0,
        insufficient_history: 0,
        precision: None,
        recall: None,
    };
    for v in verdicts {
        let label = *truth
            .get(v.seller_id.as_str())
            .ok_or_else(|| Error::NotFound(format!("label for seller {}", v.seller_id)))?;
        match (v.verdict, label) {
            (Verdict::InsufficientHistory, _) => m.insufficient_history += 1,
            (Verdict::Fraudulent, Label::Fraudulent) => m.true_positives += 1,
            (Verdict::Fraudulent, Label::Normal) => m.false_positives += 1,
            (Verdict::Normal, Label::Normal) => m.true_negatives += 1,
            (Verdict::Normal, Label::Fraudulent) => m.false_negatives += 1,
        }
    }
    let ratio = |a: usize, b: usize| (a + b > 0).then(|| a as f64 / (a + b) as f64);
    m.precision = ratio(m.true_positives, m.false_positives);
    m.recall = ratio(m.true_positives, m.false_negatives);
    Ok(m)
}
