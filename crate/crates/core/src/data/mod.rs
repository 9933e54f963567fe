//! Seller activity data: profiles, time-stamped activity records, file
//! ingestion and a seeded synthetic generator.

mod generator;
mod io;

use serde::{Deserialize, Serialize};

use crate::svm::Label;

pub use generator::{generate_synthetic, EffectSizes, GeneratorConfig};
pub use io::{
    dataset_to_string, load_dataset, load_histories, load_labeled, save_dataset, save_histories,
    save_labeled, DatasetEntry,
};

/// Seconds since the Unix epoch, UTC.
pub type Timestamp = i64;

pub const SECONDS_PER_DAY: i64 = 86_400;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SellerProfile {
    pub seller_id: String,
    pub display_name: String,
    pub tax_id: Option<String>,
    pub bank_account_hash: Option<String>,
    pub address: String,
    pub email_domain: String,
    pub enrolled_at: Timestamp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReturnReason {
    Defective,
    NotAsDescribed,
    NeverArrived,
    Other,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Activity {
    Listing {
        declared_attributes_ok: bool,
    },
    Order {
        amount: f64,
        promised_ship: Timestamp,
        actual_ship: Option<Timestamp>,
    },
    Return {
        order_ref: String,
        reason: ReturnReason,
    },
    Complaint {
        severity: u8,
    },
    SocialSignal {
        sentiment: f64,
        mentions: u32,
    },
}

impl Activity {
    /// Range checks on the record's own fields.
    pub fn check(&self) -> Result<(), String> {
        match self {
            Activity::Order { amount, .. } if !(amount.is_finite() && *amount >= 0.0) => {
                Err(format!("order amount {amount} must be finite and >= 0"))
            }
            Activity::Complaint { severity } if !(1..=5).contains(severity) => {
                Err(format!("complaint severity {severity} outside [1, 5]"))
            }
            Activity::SocialSignal { sentiment, .. } if !(-1.0..=1.0).contains(sentiment) => {
                Err(format!("sentiment {sentiment} outside [-1, 1]"))
            }
            _ => Ok(()),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Activity::Listing { .. } => "listing",
            Activity::Order { .. } => "order",
            Activity::Return { .. } => "return",
            Activity::Complaint { .. } => "complaint",
            Activity::SocialSignal { .. } => "social",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActivityRecord {
    pub activity: Activity,
    pub occurred_at: Timestamp,
}

/// Observation window, inclusive at both ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "(Timestamp, Timestamp)", into = "(Timestamp, Timestamp)")]
pub struct Window {
    pub start: Timestamp,
    pub end: Timestamp,
}

impl Window {
    pub fn contains(&self, t: Timestamp) -> bool {
        self.start <= t && t <= self.end
    }
}

impl From<(Timestamp, Timestamp)> for Window {
    fn from((start, end): (Timestamp, Timestamp)) -> Self {
        Window { start, end }
    }
}

impl From<Window> for (Timestamp, Timestamp) {
    fn from(w: Window) -> Self {
        (w.start, w.end)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SellerHistory {
    pub profile: SellerProfile,
    pub records: Vec<ActivityRecord>,
    pub window: Window,
}

impl SellerHistory {
    pub fn seller_id(&self) -> &str {
        &self.profile.seller_id
    }

    /// Stable sort of records by timestamp.
    pub fn normalize(&mut self) {
        self.records.sort_by_key(|r| r.occurred_at);
    }

    pub fn order_count(&self) -> usize {
        self.records
            .iter()
            .filter(|r| matches!(r.activity, Activity::Order { .. }))
            .count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSeller {
    pub history: SellerHistory,
    pub label: Label,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Lists every invariant violation of a history; an empty report means valid.
pub fn validate_history(history: &SellerHistory) -> ValidationReport {
    let mut violations = Vec::new();
    let id = history.seller_id();
    if id.is_empty() {
        violations.push("seller_id is empty".to_string());
    }
    if history.window.start > history.window.end {
        violations.push(format!(
            "seller {id}: window start {} after end {}",
            history.window.start, history.window.end
        ));
    }
    if history
        .records
        .windows(2)
        .any(|w| w[0].occurred_at > w[1].occurred_at)
    {
        violations.push(format!("seller {id}: records not time-ordered"));
    }
    for (i, r) in history.records.iter().enumerate() {
        if !history.window.contains(r.occurred_at) {
            violations.push(format!(
                "seller {id}: record {i} ({}) at {} outside window [{}, {}]",
                r.activity.kind(),
                r.occurred_at,
                history.window.start,
                history.window.end
            ));
        }
        if let Err(msg) = r.activity.check() {
            violations.push(format!("seller {id}: record {i} ({}): {msg}", r.activity.kind()));
        }
    }
    ValidationReport { violations }
}
