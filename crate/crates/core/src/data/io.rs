//! Dataset file: one JSON object per line, discriminated by `kind`.
//!
//! A `profile` line opens a seller and carries the observation window;
//! activity lines (`listing`, `order`, `return`, `complaint`, `social`) and an
//! optional `label` line reference it by `seller_id` and must come after it.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    validate_history, Activity, ActivityRecord, LabeledSeller, ReturnReason, SellerHistory,
    SellerProfile, Timestamp, Window,
};
use crate::error::{Error, Result};
use crate::ndjson;
use crate::svm::Label;

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetEntry {
    pub history: SellerHistory,
    pub label: Option<Label>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum Line {
    Profile {
        #[serde(flatten)]
        profile: SellerProfile,
        window: Window,
    },
    Listing {
        seller_id: String,
        occurred_at: Timestamp,
        declared_attributes_ok: bool,
    },
    Order {
        seller_id: String,
        occurred_at: Timestamp,
        amount: f64,
        promised_ship: Timestamp,
        actual_ship: Option<Timestamp>,
    },
    Return {
        seller_id: String,
        occurred_at: Timestamp,
        order_ref: String,
        reason: ReturnReason,
    },
    Complaint {
        seller_id: String,
        occurred_at: Timestamp,
        severity: u8,
    },
    Social {
        seller_id: String,
        occurred_at: Timestamp,
        sentiment: f64,
        mentions: u32,
    },
    Label {
        seller_id: String,
        label: Label,
    },
}

impl Line {
    fn from_record(seller_id: &str, r: &ActivityRecord) -> Line {
        let seller_id = seller_id.to_string();
        let occurred_at = r.occurred_at;
        match &r.activity {
            Activity::Listing {
                declared_attributes_ok,
            } => Line::Listing {
                seller_id,
                occurred_at,
                declared_attributes_ok: *declared_attributes_ok,
            },
            Activity::Order {
                amount,
                promised_ship,
                actual_ship,
            } => Line::Order {
                seller_id,
                occurred_at,
                amount: *amount,
                promised_ship: *promised_ship,
                actual_ship: *actual_ship,
            },
            Activity::Return { order_ref, reason } => Line::Return {
                seller_id,
                occurred_at,
                order_ref: order_ref.clone(),
                reason: *reason,
            },
            Activity::Complaint { severity } => Line::Complaint {
                seller_id,
                occurred_at,
                severity: *severity,
            },
            Activity::SocialSignal {
                sentiment,
                mentions,
            } => Line::Social {
                seller_id,
                occurred_at,
                sentiment: *sentiment,
                mentions: *mentions,
            },
        }
    }

    fn into_record(self) -> Option<(String, ActivityRecord)> {
        let (seller_id, occurred_at, activity) = match self {
            Line::Profile { .. } | Line::Label { .. } => return None,
            Line::Listing {
                seller_id,
                occurred_at,
                declared_attributes_ok,
            } => (
                seller_id,
                occurred_at,
                Activity::Listing {
                    declared_attributes_ok,
                },
            ),
            Line::Order {
                seller_id,
                occurred_at,
                amount,
                promised_ship,
                actual_ship,
            } => (
                seller_id,
                occurred_at,
                Activity::Order {
                    amount,
                    promised_ship,
                    actual_ship,
                },
            ),
            Line::Return {
                seller_id,
                occurred_at,
                order_ref,
                reason,
            } => (seller_id, occurred_at, Activity::Return { order_ref, reason }),
            Line::Complaint {
                seller_id,
                occurred_at,
                severity,
            } => (seller_id, occurred_at, Activity::Complaint { severity }),
            Line::Social {
                seller_id,
                occurred_at,
                sentiment,
                mentions,
            } => (
                seller_id,
                occurred_at,
                Activity::SocialSignal {
                    sentiment,
                    mentions,
                },
            ),
        };
        Some((
            seller_id,
            ActivityRecord {
                activity,
                occurred_at,
            },
        ))
    }
}

/// Loads a dataset, labels included where present.
///
/// Records are sorted by timestamp per seller; sellers keep file order.
pub fn load_dataset(path: &Path) -> Result<Vec<DatasetEntry>> {
    let mut entries: Vec<DatasetEntry> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };

    ndjson::read_lines(path, |line_no, line: Line| {
        match line {
            Line::Profile { profile, window } => {
                if profile.seller_id.is_empty() {
                    return Err(parse_err(line_no, "empty seller_id".into()));
                }
                if index.contains_key(&profile.seller_id) {
                    return Err(Error::Validation(vec![format!(
                        "duplicate seller_id {} (line {line_no})",
                        profile.seller_id
                    )]));
                }
                index.insert(profile.seller_id.clone(), entries.len());
                entries.push(DatasetEntry {
                    history: SellerHistory {
                        profile,
                        records: Vec::new(),
                        window,
                    },
                    label: None,
                });
            }
            Line::Label { seller_id, label } => {
                let &i = index
                    .get(&seller_id)
                    .ok_or_else(|| parse_err(line_no, format!("label for unknown seller {seller_id}")))?;
                entries[i].label = Some(label);
            }
            other => {
                let (seller_id, record) = other.into_record().expect("activity line");
                record
                    .activity
                    .check()
                    .map_err(|msg| parse_err(line_no, msg))?;
                let &i = index.get(&seller_id).ok_or_else(|| {
                    parse_err(line_no, format!("record for unknown seller {seller_id}"))
                })?;
                entries[i].history.records.push(record);
            }
        }
        Ok(())
    })?;

    let mut problems = Vec::new();
    for e in &mut entries {
        e.history.normalize();
        problems.extend(validate_history(&e.history).violations);
    }
    if !problems.is_empty() {
        return Err(Error::Validation(problems));
    }
    Ok(entries)
}

pub fn load_histories(path: &Path) -> Result<Vec<SellerHistory>> {
    Ok(load_dataset(path)?.into_iter().map(|e| e.history).collect())
}

/// Loads a dataset in which every seller must carry a label.
pub fn load_labeled(path: &Path) -> Result<Vec<LabeledSeller>> {
    let entries = load_dataset(path)?;
    let missing: Vec<String> = entries
        .iter()
        .filter(|e| e.label.is_none())
        .map(|e| format!("seller {} has no label", e.history.seller_id()))
        .collect();
    if !missing.is_empty() {
        return Err(Error::Validation(missing));
    }
    Ok(entries
        .into_iter()
        .map(|e| LabeledSeller {
            label: e.label.expect("checked above"),
            history: e.history,
        })
        .collect())
}

/// Renders entries in the dataset format.
pub fn dataset_to_string<'a>(entries: impl IntoIterator<Item = (&'a SellerHistory, Option<Label>)>) -> String {
    let mut out = String::new();
    let mut push = |line: &Line| {
        out.push_str(&ndjson::to_line(line));
        out.push('\n');
    };
    for (history, label) in entries {
        push(&Line::Profile {
            profile: history.profile.clone(),
            window: history.window,
        });
        for r in &history.records {
            push(&Line::from_record(history.seller_id(), r));
        }
        if let Some(label) = label {
            push(&Line::Label {
                seller_id: history.seller_id().to_string(),
                label,
            });
        }
    }
    out
}

fn write(path: &Path, text: String) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn save_dataset(path: &Path, entries: &[DatasetEntry]) -> Result<()> {
    write(path, dataset_to_string(entries.iter().map(|e| (&e.history, e.label))))
}

pub fn save_histories(path: &Path, histories: &[SellerHistory]) -> Result<()> {
    write(path, dataset_to_string(histories.iter().map(|h| (h, None))))
}

pub fn save_labeled(path: &Path, sellers: &[LabeledSeller]) -> Result<()> {
    write(path, dataset_to_string(sellers.iter().map(|s| (&s.history, Some(s.label)))))
}
