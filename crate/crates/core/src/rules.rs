//! Declarative weighted rules over extracted features.
//!
//! A ruleset file is TOML:
//!
//! ```toml
//! format = "marketguard-rules/1"
//! decision_threshold = 2.0
//!
//! [[rule]]
//! id = "high_returns"
//! feature = "return_ratio"
//! comparator = ">"
//! value = 0.15
//! weight = 1.0
//! description = "more than 15% of orders returned"
//! ```

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{feature_index, FeatureVector, FEATURE_MANIFEST};

pub const RULES_FORMAT: &str = "marketguard-rules/1";

/// Absolute tolerance of the `=` comparator.
pub const EQUALITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparator {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
}

impl Comparator {
    pub fn parse(token: &str) -> Option<Self> {
        match token {
            "<" => Some(Comparator::Lt),
            "<=" | "≤" => Some(Comparator::Le),
            ">" => Some(Comparator::Gt),
            ">=" | "≥" => Some(Comparator::Ge),
            "=" | "==" => Some(Comparator::Eq),
            _ => None,
        }
    }

    pub fn holds(self, value: f64, threshold: f64) -> bool {
        match self {
            Comparator::Lt => value < threshold,
            Comparator::Le => value <= threshold,
            Comparator::Gt => value > threshold,
            Comparator::Ge => value >= threshold,
            Comparator::Eq => (value - threshold).abs() <= EQUALITY_TOLERANCE,
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            Comparator::Lt => "<",
            Comparator::Le => "<=",
            Comparator::Gt => ">",
            Comparator::Ge => ">=",
            Comparator::Eq => "=",
        }
    }
}

impl fmt::Display for Comparator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub id: String,
    pub feature: String,
    pub comparator: Comparator,
    pub threshold_value: f64,
    pub weight: f64,
    pub description: String,
    feature_index: usize,
}

impl Rule {
    pub fn new(
        id: impl Into<String>,
        feature: &str,
        comparator: Comparator,
        threshold_value: f64,
        weight: f64,
        description: impl Into<String>,
    ) -> Result<Self> {
        let id = id.into();
        let mut problems = Vec::new();
        let index = feature_index(feature);
        if index.is_none() {
            problems.push(format!(
                "rule {id}: unknown feature {feature:?} (known: {})",
                FEATURE_MANIFEST.join(", ")
            ));
        }
        if !(weight >= 0.0 && weight.is_finite()) {
            problems.push(format!("rule {id}: weight {weight} must be finite and >= 0"));
        }
        if !threshold_value.is_finite() {
            problems.push(format!("rule {id}: value must be finite"));
        }
        if !problems.is_empty() {
            return Err(Error::Config(problems));
        }
        Ok(Rule {
            id,
            feature: feature.to_string(),
            comparator,
            threshold_value,
            weight,
            description: description.into(),
            feature_index: index.expect("checked"),
        })
    }

    pub fn fires(&self, features: &FeatureVector) -> bool {
        self.comparator
            .holds(features.values()[self.feature_index], self.threshold_value)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleSet {
    rules: Vec<Rule>,
    decision_threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleOutcome {
    pub fired: Vec<String>,
    pub aggregate_score: f64,
    pub flagged: bool,
}

impl RuleSet {
    pub fn new(rules: Vec<Rule>, decision_threshold: f64) -> Result<Self> {
        let mut problems = Vec::new();
        if !(decision_threshold >= 0.0 && decision_threshold.is_finite()) {
            problems.push(format!(
                "decision_threshold {decision_threshold} must be finite and >= 0"
            ));
        }
        let mut seen = HashSet::new();
        for r in &rules {
            if !seen.insert(r.id.as_str()) {
                problems.push(format!("duplicate rule id {:?}", r.id));
            }
        }
        if !problems.is_empty() {
            return Err(Error::Config(problems));
        }
        Ok(RuleSet {
            rules,
            decision_threshold,
        })
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn decision_threshold(&self) -> f64 {
        self.decision_threshold
    }

    /// Sums the weights of firing rules (in rule order) and compares the
    /// total against the decision threshold.
    pub fn evaluate(&self, features: &FeatureVector) -> RuleOutcome {
        let mut fired = Vec::new();
        let mut aggregate_score = 0.0;
        for rule in &self.rules {
            if rule.fires(features) {
                fired.push(rule.id.clone());
                aggregate_score += rule.weight;
            }
        }
        RuleOutcome {
            fired,
            flagged: aggregate_score >= self.decision_threshold,
            aggregate_score,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawRuleSet =
            toml::from_str(text).map_err(|e| Error::config(format!("ruleset: {e}")))?;
        raw.into_ruleset()
    }

    pub fn to_toml_string(&self) -> String {
        let raw = RawRuleSet {
            format: RULES_FORMAT.to_string(),
            decision_threshold: self.decision_threshold,
            rule: self
                .rules
                .iter()
                .map(|r| RawRule {
                    id: r.id.clone(),
                    feature: r.feature.clone(),
                    comparator: r.comparator.token().to_string(),
                    value: r.threshold_value,
                    weight: r.weight,
                    description: r.description.clone(),
                })
                .collect(),
        };
        toml::to_string(&raw).expect("ruleset serializes")
    }

    /// The illustrative ruleset shipped in `docs/rules.default.toml`.
    pub fn default_ruleset() -> Self {
        Self::from_toml_str(DEFAULT_RULES).expect("bundled ruleset is valid")
    }
}

pub fn load_ruleset(path: &Path) -> Result<RuleSet> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    RuleSet::from_toml_str(&text)
}

pub const DEFAULT_RULES: &str = include_str!("../../../docs/rules.default.toml");

#[derive(Debug, Serialize, Deserialize)]
struct RawRuleSet {
    format: String,
    decision_threshold: f64,
    #[serde(default)]
    rule: Vec<RawRule>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawRule {
    id: String,
    feature: String,
    comparator: String,
    value: f64,
    weight: f64,
    #[serde(default)]
    description: String,
}

impl RawRuleSet {
    /// Validates everything at once so the error lists every violation.
    fn into_ruleset(self) -> Result<RuleSet> {
        let mut problems = Vec::new();
        if self.format != RULES_FORMAT {
            problems.push(format!(
                "unsupported format {:?}, expected {RULES_FORMAT:?}",
                self.format
            ));
        }
        let mut rules = Vec::new();
        for r in self.rule {
            let Some(cmp) = Comparator::parse(&r.comparator) else {
                if feature_index(&r.feature).is_none() {
                    problems.push(format!("rule {}: unknown feature {:?}", r.id, r.feature));
                }
                problems.push(format!(
                    "rule {}: unsupported comparator {:?}",
                    r.id, r.comparator
                ));
                continue;
            };
            match Rule::new(r.id, &r.feature, cmp, r.value, r.weight, r.description) {
                Ok(rule) => rules.push(rule),
                Err(Error::Config(p)) => problems.extend(p),
                Err(e) => problems.push(e.to_string()),
            }
        }
        match RuleSet::new(rules, self.decision_threshold) {
            Ok(set) if problems.is_empty() => Ok(set),
            Ok(_) => Err(Error::Config(problems)),
            Err(Error::Config(p)) => {
                problems.extend(p);
                Err(Error::Config(problems))
            }
            Err(e) => Err(e),
        }
    }
}
