//! Fraud detection: reputation matching, expert inputs, rules and SVM
//! prediction consolidated into a single verdict per seller.

use std::collections::HashMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{LabeledSeller, SellerHistory, SellerProfile, Timestamp};
use crate::error::{Error, Result};
use crate::features::{apply_scaling, extract, manifest, ScalingParams};
use crate::model_file::ModelDocument;
use crate::ndjson;
use crate::rules::{RuleOutcome, RuleSet};
use crate::svm::{Label, SvmModel};

// ---------------------------------------------------------------------------
// Reputation

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReputationStatus {
    Banned,
    Clean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReputationSource {
    Internal,
    External,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReputationRecord {
    #[serde(flatten)]
    pub attributes: SellerProfile,
    pub status: ReputationStatus,
    pub source: ReputationSource,
    pub recorded_at: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReputationMatch {
    /// Position of the matched record in the reputation store.
    pub record_index: usize,
    /// Seller id the banned record was filed under.
    pub banned_seller_id: String,
    /// Attributes that matched, e.g. `["bank_account_hash"]`.
    pub matched_on: Vec<String>,
}

/// Append-only reputation store. Banned records cannot be altered once written.
#[derive(Debug, Clone, Default)]
pub struct ReputationDb {
    records: Vec<ReputationRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename = "reputation")]
struct ReputationLine {
    #[serde(flatten)]
    record: ReputationRecord,
}

impl ReputationDb {
    pub fn new(records: Vec<ReputationRecord>) -> Self {
        ReputationDb { records }
    }

    pub fn records(&self) -> &[ReputationRecord] {
        &self.records
    }

    pub fn append(&mut self, record: ReputationRecord) {
        self.records.push(record);
    }

    pub fn load(path: &Path) -> Result<Self> {
        let lines: Vec<ReputationLine> = ndjson::read_all(path)?;
        Ok(ReputationDb::new(lines.into_iter().map(|l| l.record).collect()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let lines: Vec<ReputationLine> = self
            .records
            .iter()
            .map(|r| ReputationLine { record: r.clone() })
            .collect();
        ndjson::write_all(path, &lines)
    }

    pub fn find(&self, profile: &SellerProfile) -> Option<ReputationMatch> {
        reputation_match(&self.records, profile)
    }
}

fn normalize_text(s: &str) -> String {
    s.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

fn normalize_name(s: &str) -> String {
    s.chars()
        .filter(|c| c.is_alphanumeric())
        .flat_map(char::to_lowercase)
        .collect()
}

fn same_identifier(a: &Option<String>, b: &Option<String>) -> bool {
    matches!((a, b), (Some(x), Some(y)) if !x.is_empty() && x == y)
}

/// Matches a profile against banned records.
///
/// A single strong identifier (tax id or bank account hash) suffices; weak
/// identifiers (address, email domain, normalized display name) need at
/// least two agreeing. Strong matches take priority over weak ones.
pub fn reputation_match(db: &[ReputationRecord], profile: &SellerProfile) -> Option<ReputationMatch> {
    let mut weak_hit: Option<ReputationMatch> = None;
    for (i, rec) in db.iter().enumerate() {
        if rec.status != ReputationStatus::Banned {
            continue;
        }
        let a = &rec.attributes;
        let mut strong = Vec::new();
        if same_identifier(&a.tax_id, &profile.tax_id) {
            strong.push("tax_id".to_string());
        }
        if same_identifier(&a.bank_account_hash, &profile.bank_account_hash) {
            strong.push("bank_account_hash".to_string());
        }
        if !strong.is_empty() {
            return Some(ReputationMatch {
                record_index: i,
                banned_seller_id: a.seller_id.clone(),
                matched_on: strong,
            });
        }
        if weak_hit.is_some() {
            continue;
        }
        let mut weak = Vec::new();
        if !a.address.trim().is_empty() && normalize_text(&a.address) == normalize_text(&profile.address) {
            weak.push("address".to_string());
        }
        if !a.email_domain.trim().is_empty()
            && normalize_text(&a.email_domain) == normalize_text(&profile.email_domain)
        {
            weak.push("email_domain".to_string());
        }
        let name = normalize_name(&a.display_name);
        if !name.is_empty() && name == normalize_name(&profile.display_name) {
            weak.push("display_name".to_string());
        }
        if weak.len() >= 2 {
            weak_hit = Some(ReputationMatch {
                record_index: i,
                banned_seller_id: a.seller_id.clone(),
                matched_on: weak,
            });
        }
    }
    weak_hit
}

// ---------------------------------------------------------------------------
// Expert inputs

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExpertVerdict {
    Fraudulent,
    Normal,
}

impl ExpertVerdict {
    pub fn label(self) -> Label {
        match self {
            ExpertVerdict::Fraudulent => Label::Fraudulent,
            ExpertVerdict::Normal => Label::Normal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpertInput {
    pub seller_id: String,
    pub verdict: ExpertVerdict,
    pub note: String,
    pub expert_id: String,
    pub recorded_at: Timestamp,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename = "expert")]
struct ExpertLine {
    #[serde(flatten)]
    input: ExpertInput,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Acknowledgement {
    Recorded,
    /// Same expert already gave the same verdict for this seller.
    Duplicate,
}

#[derive(Debug, Clone, Default)]
pub struct ExpertStore {
    inputs: Vec<ExpertInput>,
}

impl ExpertStore {
    pub fn new(inputs: Vec<ExpertInput>) -> Self {
        ExpertStore { inputs }
    }

    pub fn inputs(&self) -> &[ExpertInput] {
        &self.inputs
    }

    pub fn load(path: &Path) -> Result<Self> {
        let lines: Vec<ExpertLine> = ndjson::read_all(path)?;
        let inputs: Vec<ExpertInput> = lines.into_iter().map(|l| l.input).collect();
        if let Some(bad) = inputs.iter().find(|i| i.seller_id.is_empty()) {
            return Err(Error::Validation(vec![format!(
                "expert input from {} has an empty seller_id",
                bad.expert_id
            )]));
        }
        Ok(ExpertStore::new(inputs))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let lines: Vec<ExpertLine> = self
            .inputs
            .iter()
            .map(|i| ExpertLine { input: i.clone() })
            .collect();
        ndjson::write_all(path, &lines)
    }

    /// Most recent input for a seller; later entries win ties.
    pub fn latest_for(&self, seller_id: &str) -> Option<&ExpertInput> {
        self.inputs
            .iter()
            .filter(|i| i.seller_id == seller_id)
            .max_by_key(|i| i.recorded_at)
    }

    fn contains(&self, input: &ExpertInput) -> bool {
        self.inputs.iter().any(|i| {
            i.expert_id == input.expert_id && i.seller_id == input.seller_id && i.verdict == input.verdict
        })
    }
}

/// Records an expert verdict and queues the seller, labeled by the expert,
/// for the next retraining.
pub fn ingest_expert_input(
    store: &mut ExpertStore,
    input: ExpertInput,
    histories: &[SellerHistory],
    training_pool: &mut Vec<LabeledSeller>,
) -> Result<Acknowledgement> {
    if input.seller_id.is_empty() {
        return Err(Error::InvalidInput("expert input has an empty seller_id".into()));
    }
    let history = histories
        .iter()
        .find(|h| h.seller_id() == input.seller_id)
        .ok_or_else(|| Error::NotFound(format!("seller {}", input.seller_id)))?;
    if store.contains(&input) {
        return Ok(Acknowledgement::Duplicate);
    }
    training_pool.push(LabeledSeller {
        history: history.clone(),
        label: input.verdict.label(),
    });
    store.inputs.push(input);
    Ok(Acknowledgement::Recorded)
}

// ---------------------------------------------------------------------------
// Fusion

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FusionPolicy {
    pub w_rules: f64,
    pub w_svm: f64,
    pub fusion_threshold: f64,
}

impl Default for FusionPolicy {
    fn default() -> Self {
        FusionPolicy {
            w_rules: 0.4,
            w_svm: 0.6,
            fusion_threshold: 0.5,
        }
    }
}

pub const EXPERT_CONFIDENCE: f64 = 1.0;
pub const REPUTATION_CONFIDENCE: f64 = 0.95;

impl FusionPolicy {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        for (name, w) in [("w_rules", self.w_rules), ("w_svm", self.w_svm)] {
            if !(w >= 0.0 && w.is_finite()) {
                problems.push(format!("{name} = {w} must be finite and >= 0"));
            }
        }
        if (self.w_rules + self.w_svm - 1.0).abs() > 1e-9 {
            problems.push(format!(
                "w_rules + w_svm = {} must equal 1",
                self.w_rules + self.w_svm
            ));
        }
        if !(0.0..=1.0).contains(&self.fusion_threshold) {
            problems.push(format!(
                "fusion_threshold {} outside [0, 1]",
                self.fusion_threshold
            ));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignalBundle {
    pub seller_id: String,
    pub reputation_hit: Option<ReputationMatch>,
    pub expert_verdict: Option<ExpertInput>,
    pub rule_outcome: RuleOutcome,
    /// Decision threshold of the ruleset that produced `rule_outcome`.
    pub rule_threshold: f64,
    /// SVM decision value; present exactly when `has_history`.
    pub svm_score: Option<f64>,
    pub has_history: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    Fraudulent,
    Normal,
    InsufficientHistory,
}

/// Which fusion branch decided the verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictBasis {
    Expert,
    Reputation,
    ColdStart,
    Score,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contribution {
    pub signal: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename = "verdict")]
pub struct FraudVerdict {
    pub seller_id: String,
    pub verdict: Verdict,
    pub confidence: f64,
    pub basis: VerdictBasis,
    pub contributing: Vec<Contribution>,
}

pub fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

/// `min(aggregate / threshold, 1)`; a zero threshold counts as saturated.
pub fn normalized_rule_score(outcome: &RuleOutcome, threshold: f64) -> f64 {
    if threshold > 0.0 {
        (outcome.aggregate_score / threshold).min(1.0)
    } else {
        1.0
    }
}

/// Consolidates detection signals.
///
/// Precedence: an expert verdict decides outright (confidence 1.0); else a
/// reputation hit makes the seller fraudulent (0.95); else a seller without
/// order history is `InsufficientHistory` (0.0); else the weighted score
/// `s = w_rules·rules + w_svm·sigmoid(svm)` is compared to the threshold,
/// with confidence `s` for fraudulent and `1 − s` for normal.
pub fn fuse(bundle: &SignalBundle, policy: &FusionPolicy) -> Result<FraudVerdict> {
    policy.validate()?;
    if bundle.has_history != bundle.svm_score.is_some() {
        return Err(Error::InvalidInput(format!(
            "seller {}: svm_score must be present exactly when has_history",
            bundle.seller_id
        )));
    }
    if bundle.svm_score.is_some_and(|s| s.is_nan()) {
        return Err(Error::InvalidInput(format!("seller {}: svm_score is NaN", bundle.seller_id)));
    }

    let rules = normalized_rule_score(&bundle.rule_outcome, bundle.rule_threshold).clamp(0.0, 1.0);
    let mut contributing = vec![Contribution {
        signal: "rules".into(),
        value: rules,
    }];
    if let Some(score) = bundle.svm_score {
        contributing.push(Contribution {
            signal: "svm".into(),
            value: score,
        });
    }
    let verdict = |verdict, confidence, basis, contributing| FraudVerdict {
        seller_id: bundle.seller_id.clone(),
        verdict,
        confidence,
        basis,
        contributing,
    };

    if let Some(expert) = &bundle.expert_verdict {
        let mut c = contributing;
        c.insert(
            0,
            Contribution {
                signal: format!("expert:{}", expert.expert_id),
                value: expert.verdict.label().sign(),
            },
        );
        let v = match expert.verdict {
            ExpertVerdict::Fraudulent => Verdict::Fraudulent,
            ExpertVerdict::Normal => Verdict::Normal,
        };
        return Ok(verdict(v, EXPERT_CONFIDENCE, VerdictBasis::Expert, c));
    }
    if let Some(hit) = &bundle.reputation_hit {
        let mut c = contributing;
        c.insert(
            0,
            Contribution {
                signal: format!("reputation:{}", hit.banned_seller_id),
                value: 1.0,
            },
        );
        return Ok(verdict(Verdict::Fraudulent, REPUTATION_CONFIDENCE, VerdictBasis::Reputation, c));
    }
    let Some(svm) = bundle.svm_score else {
        return Ok(verdict(Verdict::InsufficientHistory, 0.0, VerdictBasis::ColdStart, contributing));
    };

    let s = (policy.w_rules * rules + policy.w_svm * sigmoid(svm)).clamp(0.0, 1.0);
    contributing.push(Contribution {
        signal: "combined".into(),
        value: s,
    });
    if s >= policy.fusion_threshold {
        Ok(verdict(Verdict::Fraudulent, s, VerdictBasis::Score, contributing))
    } else {
        Ok(verdict(Verdict::Normal, 1.0 - s, VerdictBasis::Score, contributing))
    }
}

// ---------------------------------------------------------------------------
// End-to-end detection

/// Read-only snapshot of everything detection needs.
#[derive(Debug, Clone)]
pub struct Detector {
    svm: SvmModel,
    scaling: ScalingParams,
    rules: RuleSet,
    reputation: ReputationDb,
    experts: HashMap<String, ExpertInput>,
    fusion: FusionPolicy,
}

impl Detector {
    /// Fails with a manifest mismatch if the model was not trained on this
    /// build's feature manifest.
    pub fn new(
        model: &ModelDocument,
        rules: RuleSet,
        reputation: ReputationDb,
        experts: &ExpertStore,
        fusion: FusionPolicy,
    ) -> Result<Self> {
        fusion.validate()?;
        let expected = manifest();
        if model.feature_manifest != expected
            || model.manifest_version.as_deref() != Some(crate::features::MANIFEST_VERSION)
        {
            let mut found = model.feature_manifest.clone();
            if let Some(v) = &model.manifest_version {
                found.insert(0, v.clone());
            }
            let mut want = expected;
            want.insert(0, crate::features::MANIFEST_VERSION.to_string());
            return Err(Error::ManifestMismatch {
                expected: want,
                found,
            });
        }
        let scaling = model
            .scaling
            .clone()
            .ok_or_else(|| Error::config("model file carries no scaling parameters"))?;
        let mut latest: HashMap<String, ExpertInput> = HashMap::new();
        for input in experts.inputs() {
            match latest.get(&input.seller_id) {
                Some(prev) if prev.recorded_at > input.recorded_at => {}
                _ => {
                    latest.insert(input.seller_id.clone(), input.clone());
                }
            }
        }
        Ok(Detector {
            svm: model.svm.clone(),
            scaling,
            rules,
            reputation,
            experts: latest,
            fusion,
        })
    }

    pub fn signals(&self, history: &SellerHistory) -> Result<SignalBundle> {
        let features = extract(history);
        let rule_outcome = self.rules.evaluate(&features);
        // Cold-start sellers never reach the SVM.
        let svm_score = if features.has_history {
            Some(self.svm.decision_value(&apply_scaling(&self.scaling, &features))?)
        } else {
            None
        };
        Ok(SignalBundle {
            seller_id: history.seller_id().to_string(),
            reputation_hit: self.reputation.find(&history.profile),
            expert_verdict: self.experts.get(history.seller_id()).cloned(),
            rule_outcome,
            rule_threshold: self.rules.decision_threshold(),
            svm_score,
            has_history: features.has_history,
        })
    }

    pub fn detect_seller(&self, history: &SellerHistory) -> Result<FraudVerdict> {
        fuse(&self.signals(history)?, &self.fusion)
    }

    /// Detects every seller in parallel; output order matches input order.
    pub fn detect_all(&self, histories: &[SellerHistory]) -> Result<Vec<FraudVerdict>> {
        histories.par_iter().map(|h| self.detect_seller(h)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile(id: &str) -> SellerProfile {
        SellerProfile {
            seller_id: id.into(),
            display_name: "Acme Traders".into(),
            tax_id: Some("TX-1".into()),
            bank_account_hash: Some("bank-1".into()),
            address: "1 Main St, Springfield".into(),
            email_domain: "acme.example".into(),
            enrolled_at: 0,
        }
    }

    fn banned(p: SellerProfile) -> ReputationRecord {
        ReputationRecord {
            attributes: p,
            status: ReputationStatus::Banned,
            source: ReputationSource::Internal,
            recorded_at: 10,
        }
    }

    fn stranger(id: &str) -> SellerProfile {
        SellerProfile {
            seller_id: id.into(),
            display_name: "Totally New".into(),
            tax_id: Some("TX-9".into()),
            bank_account_hash: Some("bank-9".into()),
            address: "9 Elm St, Kingston".into(),
            email_domain: "new.example".into(),
            enrolled_at: 100,
        }
    }

    #[test]
    fn shared_bank_account_matches() {
        let db = vec![banned(profile("OLD"))];
        let mut p = stranger("NEW");
        p.bank_account_hash = Some("bank-1".into());
        let hit = reputation_match(&db, &p).unwrap();
        assert_eq!(hit.matched_on, vec!["bank_account_hash"]);
        assert_eq!(hit.banned_seller_id, "OLD");
    }

    #[test]
    fn single_weak_identifier_does_not_match() {
        let db = vec![banned(profile("OLD"))];
        let mut p = stranger("NEW");
        p.email_domain = "acme.example".into();
        assert!(reputation_match(&db, &p).is_none());
    }

    #[test]
    fn two_weak_identifiers_match_despite_new_name() {
        let db = vec![banned(profile("OLD"))];
        let mut p = stranger("NEW");
        p.address = "1  main st,  SPRINGFIELD".into();
        p.email_domain = "ACME.example".into();
        let hit = reputation_match(&db, &p).unwrap();
        assert_eq!(hit.matched_on, vec!["address", "email_domain"]);
    }

    #[test]
    fn clean_records_never_match() {
        let mut rec = banned(profile("OLD"));
        rec.status = ReputationStatus::Clean;
        assert!(reputation_match(&[rec], &profile("NEW")).is_none());
    }

    #[test]
    fn missing_identifiers_are_not_equal() {
        let mut old = profile("OLD");
        old.tax_id = None;
        old.bank_account_hash = None;
        let mut p = stranger("NEW");
        p.tax_id = None;
        p.bank_account_hash = None;
        assert!(reputation_match(&[banned(old)], &p).is_none());
    }

    fn bundle() -> SignalBundle {
        SignalBundle {
            seller_id: "S".into(),
            reputation_hit: None,
            expert_verdict: None,
            rule_outcome: RuleOutcome {
                fired: vec![],
                aggregate_score: 0.0,
                flagged: false,
            },
            rule_threshold: 2.0,
            svm_score: Some(0.0),
            has_history: true,
        }
    }

    fn expert(v: ExpertVerdict) -> ExpertInput {
        ExpertInput {
            seller_id: "S".into(),
            verdict: v,
            note: String::new(),
            expert_id: "E1".into(),
            recorded_at: 5,
        }
    }

    #[test]
    fn expert_decides_outright() {
        let mut b = bundle();
        b.svm_score = Some(-3.0);
        b.expert_verdict = Some(expert(ExpertVerdict::Fraudulent));
        let v = fuse(&b, &FusionPolicy::default()).unwrap();
        assert_eq!(v.verdict, Verdict::Fraudulent);
        assert_eq!(v.confidence, 1.0);
        assert_eq!(v.basis, VerdictBasis::Expert);
    }

    #[test]
    fn cold_start_without_overrides() {
        let mut b = bundle();
        b.has_history = false;
        b.svm_score = None;
        let v = fuse(&b, &FusionPolicy::default()).unwrap();
        assert_eq!(v.verdict, Verdict::InsufficientHistory);
        assert_eq!(v.confidence, 0.0);
        assert!(v.contributing.iter().all(|c| c.signal != "svm"));
    }

    #[test]
    fn weighted_score_arithmetic() {
        let v = fuse(&bundle(), &FusionPolicy::default()).unwrap();
        assert_eq!(v.verdict, Verdict::Normal);
        assert!((v.confidence - 0.70).abs() < 1e-12);
    }

    #[test]
    fn reputation_hit_is_fraudulent() {
        let mut b = bundle();
        b.svm_score = Some(-10.0);
        b.reputation_hit = Some(ReputationMatch {
            record_index: 0,
            banned_seller_id: "OLD".into(),
            matched_on: vec!["tax_id".into()],
        });
        let v = fuse(&b, &FusionPolicy::default()).unwrap();
        assert_eq!((v.verdict, v.confidence), (Verdict::Fraudulent, 0.95));
    }

    #[test]
    fn invalid_policy_rejected() {
        let bad = FusionPolicy {
            w_rules: 0.5,
            w_svm: 0.6,
            ..FusionPolicy::default()
        };
        assert!(matches!(fuse(&bundle(), &bad), Err(Error::Config(_))));
        let negative = FusionPolicy {
            w_rules: -0.2,
            w_svm: 1.2,
            ..FusionPolicy::default()
        };
        assert!(matches!(fuse(&bundle(), &negative), Err(Error::Config(_))));
    }

    #[test]
    fn ill_formed_bundle_rejected() {
        let mut b = bundle();
        b.has_history = false;
        assert!(matches!(fuse(&b, &FusionPolicy::default()), Err(Error::InvalidInput(_))));
    }

    fn history(id: &str) -> SellerHistory {
        SellerHistory {
            profile: profile(id),
            records: vec![],
            window: crate::data::Window { start: 0, end: 100 },
        }
    }

    #[test]
    fn expert_ingest_appends_and_is_idempotent() {
        let histories = vec![history("S")];
        let mut store = ExpertStore::default();
        let mut pool = Vec::new();
        let ack = ingest_expert_input(&mut store, expert(ExpertVerdict::Fraudulent), &histories, &mut pool).unwrap();
        assert_eq!(ack, Acknowledgement::Recorded);
        assert_eq!(pool.len(), 1);
        assert_eq!(pool[0].label, Label::Fraudulent);
        assert_eq!(pool[0].history.seller_id(), "S");

        let again = ingest_expert_input(&mut store, expert(ExpertVerdict::Fraudulent), &histories, &mut pool).unwrap();
        assert_eq!(again, Acknowledgement::Duplicate);
        assert_eq!(pool.len(), 1);
        assert_eq!(store.inputs().len(), 1);

        let mut unknown = expert(ExpertVerdict::Normal);
        unknown.seller_id = "NOPE".into();
        assert!(matches!(
            ingest_expert_input(&mut store, unknown, &histories, &mut pool),
            Err(Error::NotFound(_))
        ));
    }

    #[test]
    fn latest_expert_input_wins() {
        let mut later = expert(ExpertVerdict::Normal);
        later.recorded_at = 50;
        later.expert_id = "E2".into();
        let store = ExpertStore::new(vec![expert(ExpertVerdict::Fraudulent), later]);
        assert_eq!(store.latest_for("S").unwrap().verdict, ExpertVerdict::Normal);
    }

    #[test]
    fn store_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let rp = dir.path().join("rep.ndjson");
        let db = ReputationDb::new(vec![banned(profile("OLD"))]);
        db.save(&rp).unwrap();
        let text = std::fs::read_to_string(&rp).unwrap();
        assert!(text.starts_with("{\"kind\":\"reputation\",\"seller_id\":\"OLD\""), "{text}");
        assert_eq!(ReputationDb::load(&rp).unwrap().records(), db.records());

        let ep = dir.path().join("experts.ndjson");
        let store = ExpertStore::new(vec![expert(ExpertVerdict::Normal)]);
        store.save(&ep).unwrap();
        assert_eq!(ExpertStore::load(&ep).unwrap().inputs(), store.inputs());
    }
}
