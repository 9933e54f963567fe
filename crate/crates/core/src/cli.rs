//! Command line front end.
//!
//! Every command reads a single optional TOML run configuration
//! (`--config`) and lets flags override individual entries. Machine output
//! is newline-delimited JSON objects tagged with `kind`.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{
    generate_synthetic, load_histories, load_labeled, save_labeled, GeneratorConfig,
    LabeledSeller, Timestamp,
};
use crate::detection::{Detector, ExpertStore, FraudVerdict, FusionPolicy, ReputationDb, Verdict};
use crate::error::{Error, Result};
use crate::management::{
    append_ledger, decide_action, grace_deadlines, load_ledger, Action, GraceState, LedgerEntry,
    PolicyConfig,
};
use crate::model_file::ModelDocument;
use crate::ndjson;
use crate::pipeline::{default_kernel, evaluate, holdout_split, train_pipeline};
use crate::rules::{load_ruleset, RuleSet};
use crate::svm::{Kernel, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Human,
    Machine,
}

#[derive(Debug, Parser)]
#[command(name = "marketguard", version, about = "Marketplace seller fraud detection")]
pub struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides every RNG seed in the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    pub output: Option<OutputFormat>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic labeled dataset.
    Generate {
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write a stratified held-out part here.
        #[arg(long)]
        holdout: Option<PathBuf>,
        /// Share of each class kept in `--out` when `--holdout` is given.
        #[arg(long)]
        train_fraction: Option<f64>,
        #[arg(long)]
        n_sellers: Option<usize>,
        #[arg(long)]
        fraud_fraction: Option<f64>,
    },
    /// Train the SVM on a labeled dataset.
    Train {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long)]
        experts: Option<PathBuf>,
    },
    /// Produce one verdict per seller.
    Detect {
        #[command(flatten)]
        detect: DetectArgs,
        /// Write verdicts here as well.
        #[arg(long)]
        verdicts: Option<PathBuf>,
    },
    /// Score verdicts against labels.
    Evaluate {
        #[command(flatten)]
        detect: DetectArgs,
    },
    /// Apply the action policy to a verdict file and update the ledger.
    Act {
        #[arg(long)]
        verdicts: Option<PathBuf>,
        #[arg(long)]
        ledger: Option<PathBuf>,
        /// Decision time, seconds since the Unix epoch.
        #[arg(long, allow_hyphen_values = true)]
        as_of: Timestamp,
    },
    /// Validate a ruleset file.
    RulesCheck {
        #[arg(long)]
        rules: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, clap::Args)]
pub struct DetectArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub rules: Option<PathBuf>,
    #[arg(long)]
    pub reputation: Option<PathBuf>,
    #[arg(long)]
    pub experts: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub dataset: Option<PathBuf>,
    pub holdout: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub ruleset: Option<PathBuf>,
    pub reputation: Option<PathBuf>,
    pub experts: Option<PathBuf>,
    pub verdicts: Option<PathBuf>,
    pub actions: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub kernel: Option<Kernel>,
    pub c: Option<f64>,
    pub kkt_tol: Option<f64>,
    pub value_eps: Option<f64>,
    pub max_passes: Option<usize>,
    pub rng_seed: Option<u64>,
    /// Train share used by `generate --holdout`.
    pub train_fraction: Option<f64>,
}

impl TrainSection {
    pub fn train_config(&self) -> TrainConfig {
        let d = TrainConfig::default();
        TrainConfig {
            c: self.c.unwrap_or(d.c),
            kkt_tol: self.kkt_tol.unwrap_or(d.kkt_tol),
            value_eps: self.value_eps.unwrap_or(d.value_eps),
            max_passes: self.max_passes.unwrap_or(d.max_passes),
            rng_seed: self.rng_seed.unwrap_or(d.rng_seed),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub output: Option<OutputFormat>,
    pub paths: PathsConfig,
    pub train: TrainSection,
    pub generator: GeneratorConfig,
    pub fusion: FusionPolicy,
    pub policy: PolicyConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::config(format!("{}: {e}", path.display())))
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let mut config = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.generator.rng_seed = seed;
        config.train.rng_seed = Some(seed);
    }
    let mut r = Reporter {
        out,
        format: cli.output.or(config.output).unwrap_or_default(),
    };
    match &cli.command {
        Command::Generate {
            out: path,
            holdout,
            train_fraction,
            n_sellers,
            fraud_fraction,
        } => {
            if let Some(n) = n_sellers {
                config.generator.n_sellers = *n;
            }
            if let Some(f) = fraud_fraction {
                config.generator.fraud_fraction = *f;
            }
            let path = required(path, &config.paths.dataset, "dataset output path (--out)")?;
            let holdout = holdout.clone().or(config.paths.holdout.clone());
            let fraction = train_fraction.or(config.train.train_fraction).unwrap_or(0.7);
            cmd_generate(&config.generator, &path, holdout.as_deref(), fraction, &mut r)
        }
        Command::Train {
            data,
            model,
            c,
            experts,
        } => {
            let data = required(data, &config.paths.dataset, "dataset (--data)")?;
            let model = required(model, &config.paths.model, "model output path (--model)")?;
            let experts = experts.clone().or(config.paths.experts.clone());
            let mut train = config.train.train_config();
            if let Some(c) = c {
                train.c = *c;
            }
            let kernel = config.train.kernel.unwrap_or_else(default_kernel);
            cmd_train(&data, &model, experts.as_deref(), kernel, &train, &mut r)
        }
        Command::Detect { detect, verdicts } => {
            let inputs = DetectInputs::resolve(detect, &config)?;
            let verdicts = verdicts.clone().or(config.paths.verdicts.clone());
            cmd_detect(&inputs, verdicts.as_deref(), &mut r)
        }
        Command::Evaluate { detect } => {
            let inputs = DetectInputs::resolve(detect, &config)?;
            cmd_evaluate(&inputs, &mut r)
        }
        Command::Act {
            verdicts,
            ledger,
            as_of,
        } => {
            let verdicts = required(verdicts, &config.paths.verdicts, "verdict file (--verdicts)")?;
            let ledger = required(ledger, &config.paths.actions, "actions ledger (--ledger)")?;
            cmd_act(&verdicts, &ledger, &config.policy, *as_of, &mut r)
        }
        Command::RulesCheck { rules } => {
            let rules = required(rules, &config.paths.ruleset, "ruleset (--rules)")?;
            cmd_rules_check(&rules, &mut r)
        }
    }
}

fn required(flag: &Option<PathBuf>, configured: &Option<PathBuf>, what: &str) -> Result<PathBuf> {
    flag.clone()
        .or_else(|| configured.clone())
        .ok_or_else(|| Error::config(format!("missing {what}")))
}

fn check_input(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::NotFound(format!("input file {}", path.display())))
    }
}

fn check_output(path: &Path) -> Result<()> {
    let parent = path.parent().filter(|p| !p.as_os_str().is_empty());
    match parent {
        Some(dir) if !dir.is_dir() => Err(Error::NotFound(format!("output directory {}", dir.display()))),
        _ if path.is_dir() => Err(Error::InvalidInput(format!("{} is a directory", path.display()))),
        _ => Ok(()),
    }
}

struct Reporter<'a> {
    out: &'a mut dyn Write,
    format: OutputFormat,
}

impl Reporter<'_> {
    /// Emits `human` in human mode and `machine` as one JSON line otherwise.
    fn emit<T: Serialize>(&mut self, human: impl FnOnce() -> String, machine: &T) -> Result<()> {
        let line = match self.format {
            OutputFormat::Human => human(),
            OutputFormat::Machine => ndjson::to_line(machine),
        };
        writeln!(self.out, "{line}").map_err(|e| Error::io("<stdout>", e))
    }
}

#[derive(Serialize)]
#[serde(tag = "kind", rename = "generate_summary")]
struct GenerateSummary {
    sellers: usize,
    fraudulent: usize,
    cold_start: usize,
    held_out: usize,
}

pub fn cmd_generate_to(
    config: &GeneratorConfig,
    path: &Path,
    holdout: Option<&Path>,
    train_fraction: f64,
) -> Result<(Vec<LabeledSeller>, Vec<LabeledSeller>)> {
    config.validate()?;
    check_output(path)?;
    if let Some(h) = holdout {
        check_output(h)?;
    }
    let sellers = generate_synthetic(config)?;
    let (main, held) = match holdout {
        Some(h) => {
            let (a, b) = holdout_split(&sellers, train_fraction, config.rng_seed)?;
            save_labeled(h, &b)?;
            (a, b)
        }
        None => (sellers, Vec::new()),
    };
    save_labeled(path, &main)?;
    Ok((main, held))
}

fn cmd_generate(
    config: &GeneratorConfig,
    path: &Path,
    holdout: Option<&Path>,
    train_fraction: f64,
    r: &mut Reporter,
) -> Result<()> {
    let (main, held) = cmd_generate_to(config, path, holdout, train_fraction)?;
    let all = || main.iter().chain(&held);
    let s = GenerateSummary {
        sellers: main.len() + held.len(),
        fraudulent: all().filter(|x| x.label == crate::svm::Label::Fraudulent).count(),
        cold_start: all().filter(|x| x.history.order_count() == 0).count(),
        held_out: held.len(),
    };
    r.emit(
        || {
            let mut line = format!(
                "generated {} sellers ({} fraudulent, {} without orders) -> {}",
                s.sellers,
                s.fraudulent,
                s.cold_start,
                path.display()
            );
            if let Some(h) = holdout {
                line.push_str(&format!("; {} held out -> {}", s.held_out, h.display()));
            }
            line
        },
        &s,
    )
}

#[derive(Serialize)]
#[serde(tag = "kind", rename = "train_summary")]
struct TrainSummary {
    trained_on: usize,
    skipped_cold_start: usize,
    expert_overrides: usize,
    support_vectors: usize,
    kkt_violation: f64,
    kkt_tol: f64,
}

/// Replaces file labels with the latest expert verdict where one exists.
pub fn apply_expert_labels(sellers: &mut [LabeledSeller], experts: &ExpertStore) -> usize {
    let mut changed = 0;
    for s in sellers.iter_mut() {
        if let Some(input) = experts.latest_for(s.history.seller_id()) {
            let label = input.verdict.label();
            if label != s.label {
                s.label = label;
                changed += 1;
            }
        }
    }
    changed
}

fn cmd_train(
    data: &Path,
    model: &Path,
    experts: Option<&Path>,
    kernel: Kernel,
    config: &TrainConfig,
    r: &mut Reporter,
) -> Result<()> {
    check_input(data)?;
    if let Some(p) = experts {
        check_input(p)?;
    }
    check_output(model)?;
    config.validate()?;
    kernel.validate()?;
    let mut sellers = load_labeled(data)?;
    let overrides = match experts {
        Some(p) => apply_expert_labels(&mut sellers, &ExpertStore::load(p)?),
        None => 0,
    };
    let (doc, report) = train_pipeline(&sellers, kernel, config)?;
    doc.save(model)?;
    let s = TrainSummary {
        trained_on: report.trained_on,
        skipped_cold_start: report.skipped_cold_start,
        expert_overrides: overrides,
        support_vectors: report.support_vectors,
        kkt_violation: report.kkt_violation,
        kkt_tol: config.kkt_tol,
    };
    r.emit(
        || {
            format!(
                "trained on {} sellers ({} without orders skipped, {} expert relabels): {} support vectors, KKT violation {:.3e} (tol {:.1e}) -> {}",
                s.trained_on,
                s.skipped_cold_start,
                s.expert_overrides,
                s.support_vectors,
                s.kkt_violation,
                s.kkt_tol,
                model.display()
            )
        },
        &s,
    )
}

struct DetectInputs {
    data: PathBuf,
    model: PathBuf,
    rules: Option<PathBuf>,
    reputation: Option<PathBuf>,
    experts: Option<PathBuf>,
    fusion: FusionPolicy,
}

impl DetectInputs {
    fn resolve(args: &DetectArgs, config: &RunConfig) -> Result<Self> {
        let p = &config.paths;
        let inputs = DetectInputs {
            data: required(&args.data, &p.dataset, "dataset (--data)")?,
            model: required(&args.model, &p.model, "model (--model)")?,
            rules: args.rules.clone().or(p.ruleset.clone()),
            reputation: args.reputation.clone().or(p.reputation.clone()),
            experts: args.experts.clone().or(p.experts.clone()),
            fusion: config.fusion,
        };
        check_input(&inputs.data)?;
        check_input(&inputs.model)?;
        for path in [&inputs.rules, &inputs.reputation, &inputs.experts].into_iter().flatten() {
            check_input(path)?;
        }
        inputs.fusion.validate()?;
        Ok(inputs)
    }

    fn detector(&self) -> Result<Detector> {
        let model = ModelDocument::load(&self.model)?;
        let rules = match &self.rules {
            Some(p) => load_ruleset(p)?,
            None => RuleSet::default_ruleset(),
        };
        let reputation = match &self.reputation {
            Some(p) => ReputationDb::load(p)?,
            None => ReputationDb::default(),
        };
        let experts = match &self.experts {
            Some(p) => ExpertStore::load(p)?,
            None => ExpertStore::default(),
        };
        Detector::new(&model, rules, reputation, &experts, self.fusion)
    }
}

#[derive(Serialize)]
#[serde(tag = "kind", rename = "detect_summary")]
struct DetectSummary {
    sellers: usize,
    counts: BTreeMap<String, usize>,
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Fraudulent => "Fraudulent",
        Verdict::Normal => "Normal",
        Verdict::InsufficientHistory => "InsufficientHistory",
    }
}

fn cmd_detect(inputs: &DetectInputs, verdicts_path: Option<&Path>, r: &mut Reporter) -> Result<()> {
    if let Some(p) = verdicts_path {
        check_output(p)?;
    }
    let detector = inputs.detector()?;
    let histories = load_histories(&inputs.data)?;
    let verdicts = detector.detect_all(&histories)?;
    if let Some(p) = verdicts_path {
        ndjson::write_all(p, &verdicts)?;
    }
    let mut counts = BTreeMap::new();
    for v in &verdicts {
        *counts.entry(verdict_name(v.verdict).to_string()).or_insert(0) += 1;
        r.emit(
            || {
                format!(
                    "{:<12} {:<20} {:.3}  {:?}",
                    v.seller_id,
                    verdict_name(v.verdict),
                    v.confidence,
                    v.basis
                )
            },
            v,
        )?;
    }
    let s = DetectSummary {
        sellers: verdicts.len(),
        counts,
    };
    r.emit(
        || {
            let parts: Vec<String> = s.counts.iter().map(|(k, n)| format!("{k} {n}")).collect();
            format!("{} sellers: {}", s.sellers, parts.join(", "))
        },
        &s,
    )
}

#[derive(Serialize)]
#[serde(tag = "kind", rename = "evaluation")]
struct EvaluationReport {
    #[serde(flatten)]
    metrics: crate::pipeline::Metrics,
}

fn cmd_evaluate(inputs: &DetectInputs, r: &mut Reporter) -> Result<()> {
    let detector = inputs.detector()?;
    let sellers = load_labeled(&inputs.data)?;
    let histories: Vec<_> = sellers.iter().map(|s| s.history.clone()).collect();
    let verdicts = detector.detect_all(&histories)?;
    let labeled: Vec<_> = sellers.iter().map(|s| (&s.history, s.label)).collect();
    let m = evaluate(&verdicts, &labeled)?;
    let fmt = |x: Option<f64>| x.map_or("undefined".to_string(), |v| format!("{v:.4}"));
    let human = format!(
        "precision {}  recall {}\n              predicted+  predicted-\n  actual+     {:>10}  {:>10}\n  actual-     {:>10}  {:>10}\ninsufficient history (excluded): {}",
        fmt(m.precision),
        fmt(m.recall),
        m.true_positives,
        m.false_negatives,
        m.false_positives,
        m.true_negatives,
        m.insufficient_history
    );
    r.emit(|| human, &EvaluationReport { metrics: m.clone() })
}

#[derive(Serialize)]
#[serde(tag = "kind", rename = "act_summary")]
struct ActSummary {
    batch: String,
    appended: usize,
    already_recorded: usize,
    actions: BTreeMap<String, usize>,
}

#[derive(Serialize)]
#[serde(tag = "kind", rename = "grace")]
struct GraceLine<'a> {
    #[serde(flatten)]
    report: &'a crate::management::GraceReport,
}

/// Digest identifying a verdict batch.
pub fn batch_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn cmd_act(
    verdicts_path: &Path,
    ledger_path: &Path,
    policy: &PolicyConfig,
    as_of: Timestamp,
    r: &mut Reporter,
) -> Result<()> {
    check_input(verdicts_path)?;
    check_output(ledger_path)?;
    policy.validate()?;
    let bytes = fs::read(verdicts_path).map_err(|e| Error::io(verdicts_path, e))?;
    let batch = batch_digest(&bytes);
    let verdicts: Vec<FraudVerdict> = ndjson::read_all(verdicts_path)?;
    let mut ledger = load_ledger(ledger_path)?;

    let mut appended = Vec::new();
    let mut already = 0;
    let mut actions: BTreeMap<String, usize> = Action::ALL.iter().map(|a| (format!("{a:?}"), 0)).collect();
    for v in &verdicts {
        if ledger.iter().any(|e| e.batch == batch && e.decision.seller_id == v.seller_id) {
            already += 1;
            continue;
        }
        let priors: Vec<_> = ledger.iter().map(|e| e.decision.clone()).collect();
        let decision = decide_action(v, policy, &priors, as_of)?;
        *actions.entry(format!("{:?}", decision.action)).or_insert(0) += 1;
        if decision.action != Action::NoAction {
            let entry = LedgerEntry {
                batch: batch.clone(),
                decision,
            };
            ledger.push(entry.clone());
            appended.push(entry);
        }
    }
    if !appended.is_empty() {
        append_ledger(ledger_path, &appended)?;
    }
    let s = ActSummary {
        batch: batch.clone(),
        appended: appended.len(),
        already_recorded: already,
        actions,
    };
    r.emit(
        || {
            let parts: Vec<String> = s.actions.iter().map(|(k, n)| format!("{k} {n}")).collect();
            format!(
                "batch {}: {} appended, {} already recorded; {}",
                &s.batch[..12],
                s.appended,
                s.already_recorded,
                parts.join(", ")
            )
        },
        &s,
    )?;
    for g in grace_deadlines(&ledger, as_of) {
        r.emit(
            || {
                let state = match g.state {
                    GraceState::Pending => "pending",
                    GraceState::Expired => "EXPIRED",
                };
                format!("grace {:<12} deadline {} {state}", g.seller_id, g.deadline)
            },
            &GraceLine { report: &g },
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
#[serde(tag = "kind", rename = "ruleset_ok")]
struct RulesOk {
    rules: usize,
    decision_threshold: f64,
}

fn cmd_rules_check(path: &Path, r: &mut Reporter) -> Result<()> {
    check_input(path)?;
    let rules = load_ruleset(path)?;
    let s = RulesOk {
        rules: rules.rules().len(),
        decision_threshold: rules.decision_threshold(),
    };
    r.emit(
        || format!("{}: {} rules, decision threshold {}", path.display(), s.rules, s.decision_threshold),
        &s,
    )
}
