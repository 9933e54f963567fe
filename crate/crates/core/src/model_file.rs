//! Versioned model document (`marketguard-svm/1`).
//!
//! Pretty-printed JSON holding the kernel, support vectors, dual
//! coefficients, bias, the training configuration, and (for pipeline
//! models) the feature manifest and scaling parameters. Floats are written
//! in shortest round-trip form, so a reloaded model reproduces decision
//! values bit for bit.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{ScalingParams, MANIFEST_VERSION};
use crate::svm::{SvmModel, TrainConfig};

pub const MODEL_FORMAT: &str = "marketguard-svm/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub format: String,
    /// Feature manifest version; absent for models trained on raw samples.
    pub manifest_version: Option<String>,
    pub feature_manifest: Vec<String>,
    pub dimension: usize,
    pub train_config: TrainConfig,
    pub scaling: Option<ScalingParams>,
    pub svm: SvmModel,
}

impl ModelDocument {
    /// Wraps a model trained on raw samples.
    pub fn raw(svm: SvmModel, train_config: TrainConfig, dimension: usize) -> Self {
        ModelDocument {
            format: MODEL_FORMAT.to_string(),
            manifest_version: None,
            feature_manifest: Vec::new(),
            dimension,
            train_config,
            scaling: None,
            svm,
        }
    }

    /// Wraps a model trained on scaled seller features.
    pub fn pipeline(svm: SvmModel, train_config: TrainConfig, scaling: ScalingParams, manifest: Vec<String>) -> Self {
        ModelDocument {
            format: MODEL_FORMAT.to_string(),
            manifest_version: Some(MANIFEST_VERSION.to_string()),
            dimension: manifest.len(),
            feature_manifest: manifest,
            train_config,
            scaling: Some(scaling),
            svm,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.format != MODEL_FORMAT {
            problems.push(format!(
                "unsupported model format {:?}, expected {MODEL_FORMAT:?}",
                self.format
            ));
        }
        if let Err(e) = self.svm.validate() {
            problems.push(e.to_string());
        }
        if let Some(d) = self.svm.dim() {
            if d != self.dimension {
                problems.push(format!(
                    "support vectors have dimension {d}, document says {}",
                    self.dimension
                ));
            }
        }
        if !self.feature_manifest.is_empty() && self.feature_manifest.len() != self.dimension {
            problems.push(format!(
                "feature manifest lists {} features for dimension {}",
                self.feature_manifest.len(),
                self.dimension
            ));
        }
        if let Some(s) = &self.scaling {
            if s.ranges.len() != self.dimension {
                problems.push(format!(
                    "scaling has {} ranges for dimension {}",
                    s.ranges.len(),
                    self.dimension
                ));
            }
            if s.ranges.iter().any(|r| !(r.max >= r.min)) {
                problems.push("scaling range with max < min".to_string());
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(problems))
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(text).map_err(|e| Error::Parse {
            path: "<model>".into(),
            line: e.line(),
            message: e.to_string(),
        })?;
        doc.validate()?;
        Ok(doc)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text).map_err(|e| match e {
            Error::Parse { line, message, .. } => Error::Parse {
                path: path.to_path_buf(),
                line,
                message,
            },
            other => other,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::svm::{train_smo, Kernel, Label, Sample};
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn reload_reproduces_decision_values_bitwise(
            pts in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 3), 4..12),
            probes in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 3), 1..10),
            gamma in 0.05f64..2.0,
        ) {
            let x: Vec<Sample> = pts.into_iter().map(Sample).collect();
            let y: Vec<Label> = (0..x.len())
                .map(|i| if i % 2 == 0 { Label::Normal } else { Label::Fraudulent })
                .collect();
            let cfg = TrainConfig::default();
            let model = train_smo(&x, &y, Kernel::Rbf { gamma }, &cfg).unwrap();
            let doc = ModelDocument::raw(model, cfg, 3);
            let back = ModelDocument::from_text(&doc.to_text()).unwrap();
            prop_assert_eq!(&back, &doc);
            for p in probes {
                let p = Sample(p);
                prop_assert_eq!(
                    doc.svm.decision_value(&p).unwrap().to_bits(),
                    back.svm.decision_value(&p).unwrap().to_bits()
                );
            }
        }
    }

    #[test]
    fn wrong_format_tag_rejected() {
        let model = SvmModel {
            kernel: Kernel::Linear,
            support_samples: vec![Sample(vec![1.0])],
            support_labels: vec![Label::Normal],
            alphas: vec![1.0],
            bias: 0.0,
        };
        let mut doc = ModelDocument::raw(model, TrainConfig::default(), 1);
        doc.format = "marketguard-svm/0".into();
        assert!(matches!(ModelDocument::from_text(&doc.to_text()), Err(Error::Validation(_))));
    }
}
