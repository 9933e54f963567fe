//! Seller history to feature vector, plus min-max scaling into SVM samples.

use serde::{Deserialize, Serialize};

use crate::data::{Activity, SellerHistory};
use crate::error::{Error, Result};
use crate::svm::Sample;

/// Version tag of [`FEATURE_MANIFEST`]; bump whenever names or order change.
pub const MANIFEST_VERSION: &str = "marketguard-features/1";

/// Index order of features in every scaled [`Sample`].
pub const FEATURE_MANIFEST: [&str; 7] = [
    "listing_accuracy",
    "transaction_volume",
    "sla_adherence",
    "return_ratio",
    "complaint_rate",
    "customer_satisfaction",
    "social_sentiment",
];

pub fn manifest() -> Vec<String> {
    FEATURE_MANIFEST.iter().map(|s| s.to_string()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    /// Share of listings whose declared attributes checked out.
    pub listing_accuracy: f64,
    /// Orders in the observation window.
    pub transaction_volume: f64,
    /// Share of shipped orders that shipped by the promised time.
    pub sla_adherence: f64,
    pub return_ratio: f64,
    /// Severity-weighted complaints per order.
    pub complaint_rate: f64,
    /// `1 − clamp(Σ severity / (5 · orders), 0, 1)`.
    pub customer_satisfaction: f64,
    /// Mention-weighted mean sentiment of social signals.
    pub social_sentiment: f64,
    pub has_history: bool,
}

impl FeatureVector {
    /// Values in manifest order.
    pub fn values(&self) -> [f64; 7] {
        [
            self.listing_accuracy,
            self.transaction_volume,
            self.sla_adherence,
            self.return_ratio,
            self.complaint_rate,
            self.customer_satisfaction,
            self.social_sentiment,
        ]
    }

    pub fn from_values(values: [f64; 7], has_history: bool) -> Self {
        FeatureVector {
            listing_accuracy: values[0],
            transaction_volume: values[1],
            sla_adherence: values[2],
            return_ratio: values[3],
            complaint_rate: values[4],
            customer_satisfaction: values[5],
            social_sentiment: values[6],
            has_history,
        }
    }

    pub fn get(&self, feature: &str) -> Option<f64> {
        feature_index(feature).map(|i| self.values()[i])
    }
}

pub fn feature_index(feature: &str) -> Option<usize> {
    FEATURE_MANIFEST.iter().position(|f| *f == feature)
}

/// Extracts the feature vector of one seller.
///
/// Degenerate denominators: with zero orders the return ratio and complaint
/// rate are 0, SLA adherence and satisfaction 1, and `has_history` is false.
/// With orders but none shipped, SLA adherence is 0. No listings gives
/// listing accuracy 1; no social signals gives sentiment 0, and signals that
/// all carry zero mentions are averaged unweighted.
pub fn extract(history: &SellerHistory) -> FeatureVector {
    let mut listings = 0usize;
    let mut accurate = 0usize;
    let mut orders = 0usize;
    let mut shipped = 0usize;
    let mut on_time = 0usize;
    let mut returns = 0usize;
    let mut severity = 0u64;
    let mut mention_sum = 0.0;
    let mut weighted_sentiment = 0.0;
    let mut sentiments = Vec::new();

    for r in &history.records {
        match &r.activity {
            Activity::Listing {
                declared_attributes_ok,
            } => {
                listings += 1;
                accurate += *declared_attributes_ok as usize;
            }
            Activity::Order {
                promised_ship,
                actual_ship,
                ..
            } => {
                orders += 1;
                if let Some(actual) = actual_ship {
                    shipped += 1;
                    on_time += (actual <= promised_ship) as usize;
                }
            }
            Activity::Return { .. } => returns += 1,
            Activity::Complaint { severity: s } => severity += *s as u64,
            Activity::SocialSignal {
                sentiment,
                mentions,
            } => {
                mention_sum += *mentions as f64;
                weighted_sentiment += sentiment * *mentions as f64;
                sentiments.push(*sentiment);
            }
        }
    }

    let ratio = |num: usize, den: usize, empty: f64| {
        if den == 0 {
            empty
        } else {
            num as f64 / den as f64
        }
    };
    let has_history = orders > 0;
    let (return_ratio, complaint_rate, customer_satisfaction, sla_adherence) = if has_history {
        let n = orders as f64;
        (
            (returns as f64 / n).min(1.0),
            severity as f64 / n,
            1.0 - (severity as f64 / (5.0 * n)).clamp(0.0, 1.0),
            ratio(on_time, shipped, 0.0),
        )
    } else {
        (0.0, 0.0, 1.0, 1.0)
    };
    let social_sentiment = if mention_sum > 0.0 {
        weighted_sentiment / mention_sum
    } else if !sentiments.is_empty() {
        sentiments.iter().sum::<f64>() / sentiments.len() as f64
    } else {
        0.0
    };

    FeatureVector {
        listing_accuracy: ratio(accurate, listings, 1.0),
        transaction_volume: orders as f64,
        sla_adherence,
        return_ratio,
        complaint_rate,
        customer_satisfaction,
        social_sentiment: social_sentiment.clamp(-1.0, 1.0),
        has_history,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureRange {
    pub min: f64,
    pub max: f64,
}

/// Per-feature ranges in manifest order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingParams {
    pub ranges: Vec<FeatureRange>,
}

pub fn fit_scaling(vectors: &[FeatureVector]) -> Result<ScalingParams> {
    let first = vectors
        .first()
        .ok_or_else(|| Error::InvalidInput("cannot fit scaling on an empty corpus".into()))?;
    let mut ranges: Vec<FeatureRange> = first
        .values()
        .iter()
        .map(|&v| FeatureRange { min: v, max: v })
        .collect();
    for v in &vectors[1..] {
        for (r, x) in ranges.iter_mut().zip(v.values()) {
            r.min = r.min.min(x);
            r.max = r.max.max(x);
        }
    }
    Ok(ScalingParams { ranges })
}

/// Maps each feature to `(x − min)/(max − min)` clamped to [0, 1]; constant
/// features map to 0.5.
pub fn apply_scaling(params: &ScalingParams, v: &FeatureVector) -> Sample {
    Sample(
        params
            .ranges
            .iter()
            .zip(v.values())
            .map(|(r, x)| {
                if r.max > r.min {
                    ((x - r.min) / (r.max - r.min)).clamp(0.0, 1.0)
                } else {
                    0.5
                }
            })
            .collect(),
    )
}
