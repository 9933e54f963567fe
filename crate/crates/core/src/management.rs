//! Fraud management: maps verdicts to marketplace actions.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{Timestamp, SECONDS_PER_DAY};
use crate::detection::{FraudVerdict, Verdict, VerdictBasis};
use crate::error::{Error, Result};
use crate::ndjson;

/// Half-open confidence interval `[lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band(pub f64, pub f64);

impl Band {
    pub fn contains(&self, x: f64) -> bool {
        x >= self.0 && x < self.1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicyConfig {
    pub warn_band: Band,
    pub suspend_band: Band,
    pub ban_floor: f64,
    pub grace_period_days: i64,
    pub repeat_escalation: bool,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        PolicyConfig {
            warn_band: Band(0.5, 0.7),
            suspend_band: Band(0.7, 0.9),
            ban_floor: 0.9,
            grace_period_days: 14,
            repeat_escalation: true,
        }
    }
}

impl PolicyConfig {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        let (w, s) = (self.warn_band, self.suspend_band);
        for (name, b) in [("warn_band", w), ("suspend_band", s)] {
            if !(b.0.is_finite() && b.1.is_finite() && b.0 < b.1) {
                problems.push(format!("{name} [{}, {}) is empty or not finite", b.0, b.1));
            }
        }
        if w.1 > s.0 {
            problems.push(format!("warn_band overlaps suspend_band ({} > {})", w.1, s.0));
        }
        if !self.ban_floor.is_finite() || s.1 > self.ban_floor {
            problems.push(format!("suspend_band overlaps ban_floor ({} > {})", s.1, self.ban_floor));
        }
        if self.grace_period_days <= 0 {
            problems.push(format!("grace_period_days {} must be > 0", self.grace_period_days));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }

    fn band_action(&self, confidence: f64) -> Action {
        if confidence >= self.ban_floor {
            Action::Ban
        } else if self.suspend_band.contains(confidence) {
            Action::SuspendWithGrace
        } else if self.warn_band.contains(confidence) {
            Action::Warn
        } else if confidence >= self.suspend_band.1 {
            // gap between suspend band and ban floor
            Action::SuspendWithGrace
        } else if confidence >= self.warn_band.1 {
            Action::Warn
        } else {
            Action::NoAction
        }
    }
}

/// Ordered from weakest to strongest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Action {
    NoAction,
    Warn,
    SuspendWithGrace,
    Ban,
}

impl Action {
    pub fn escalate(self) -> Action {
        match self {
            Action::NoAction => Action::Warn,
            Action::Warn => Action::SuspendWithGrace,
            Action::SuspendWithGrace | Action::Ban => Action::Ban,
        }
    }

    pub const ALL: [Action; 4] = [Action::NoAction, Action::Warn, Action::SuspendWithGrace, Action::Ban];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionDecision {
    pub seller_id: String,
    pub action: Action,
    pub deadline: Option<Timestamp>,
    pub rationale: String,
    pub decided_at: Timestamp,
}

/// Chooses an action for one verdict. `prior_actions` may contain other
/// sellers' decisions; only this seller's are considered.
pub fn decide_action(
    verdict: &FraudVerdict,
    policy: &PolicyConfig,
    prior_actions: &[ActionDecision],
    now: Timestamp,
) -> Result<ActionDecision> {
    policy.validate()?;
    let (action, rationale) = match verdict.verdict {
        Verdict::Normal => (Action::NoAction, "verdict normal".to_string()),
        Verdict::InsufficientHistory => (Action::NoAction, "insufficient history".to_string()),
        Verdict::Fraudulent if verdict.basis == VerdictBasis::Reputation => {
            (Action::Ban, "matches a banned seller".to_string())
        }
        Verdict::Fraudulent => {
            let base = policy.band_action(verdict.confidence);
            let prior = prior_actions.iter().any(|p| {
                p.seller_id == verdict.seller_id
                    && matches!(p.action, Action::Warn | Action::SuspendWithGrace)
            });
            let mut why = format!("fraudulent, confidence {:.3} -> {:?}", verdict.confidence, base);
            let action = if policy.repeat_escalation && prior && base != Action::NoAction {
                let up = base.escalate();
                if up != base {
                    why.push_str(&format!(", escalated to {up:?} after prior action"));
                }
                up
            } else {
                base
            };
            (action, why)
        }
    };
    let deadline =
        (action == Action::SuspendWithGrace).then(|| now + policy.grace_period_days * SECONDS_PER_DAY);
    Ok(ActionDecision {
        seller_id: verdict.seller_id.clone(),
        action,
        deadline,
        rationale,
        decided_at: now,
    })
}

// ---------------------------------------------------------------------------
// Actions ledger

/// One line of the append-only actions ledger.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename = "action")]
pub struct LedgerEntry {
    /// Digest of the verdict batch the decision came from.
    pub batch: String,
    #[serde(flatten)]
    pub decision: ActionDecision,
}

pub fn load_ledger(path: &Path) -> Result<Vec<LedgerEntry>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    ndjson::read_all(path)
}

pub fn append_ledger(path: &Path, entries: &[LedgerEntry]) -> Result<()> {
    ndjson::append(path, entries)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraceState {
    Pending,
    Expired,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraceReport {
    pub seller_id: String,
    pub deadline: Timestamp,
    pub state: GraceState,
}

/// Grace deadlines whose suspension is still the seller's latest action.
pub fn grace_deadlines(ledger: &[LedgerEntry], as_of: Timestamp) -> Vec<GraceReport> {
    let mut latest: std::collections::BTreeMap<&str, &ActionDecision> = Default::default();
    for e in ledger {
        let d = &e.decision;
        if d.action == Action::NoAction {
            continue;
        }
        match latest.get(d.seller_id.as_str()) {
            Some(prev) if prev.decided_at > d.decided_at => {}
            _ => {
                latest.insert(&d.seller_id, d);
            }
        }
    }
    latest
        .into_values()
        .filter_map(|d| {
            let deadline = d.deadline?;
            Some(GraceReport {
                seller_id: d.seller_id.clone(),
                deadline,
                state: if deadline > as_of {
                    GraceState::Pending
                } else {
                    GraceState::Expired
                },
            })
        })
        .collect()
}
