use std::path::{Path, PathBuf};
use std::process::Command;

use marketguard::cli::run;
use marketguard::data::{load_labeled, save_labeled};
use marketguard::detection::{ExpertInput, ExpertStore, ExpertVerdict, FraudVerdict, Verdict};
use marketguard::management::{load_ledger, Action};
use marketguard::model_file::ModelDocument;
use marketguard::ndjson;

fn mg(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["marketguard"];
    full.extend_from_slice(args);
    let code = run(full, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

struct Fixture {
    _dir: tempfile::TempDir,
    root: PathBuf,
}

impl Fixture {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        Fixture { _dir: dir, root }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Small generated split plus a trained model.
    fn trained(n: &str) -> Self {
        let f = Fixture::new();
        let (train, test, model) = (f.path("train.ndjson"), f.path("test.ndjson"), f.path("model.json"));
        let (code, _, err) = mg(&["generate", "--n-sellers", n, "--out", p(&train), "--holdout", p(&test)]);
        assert_eq!(code, 0, "{err}");
        let (code, _, err) = mg(&["train", "--data", p(&train), "--model", p(&model)]);
        assert_eq!(code, 0, "{err}");
        f
    }
}

#[test]
fn generate_reports_counts_and_is_reproducible() {
    let f = Fixture::new();
    let (a, b) = (f.path("a.ndjson"), f.path("b.ndjson"));
    let (code, out, _) = mg(&["--output", "machine", "generate", "--n-sellers", "50", "--out", p(&a)]);
    assert_eq!(code, 0);
    assert!(out.starts_with("{\"kind\":\"generate_summary\",\"sellers\":50,\"fraudulent\":10"), "{out}");
    mg(&["generate", "--n-sellers", "50", "--out", p(&b)]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let (code, _, err) = mg(&["generate", "--fraud-fraction", "1.2", "--out", p(&a)]);
    assert_eq!(code, 2);
    assert!(err.contains("fraud_fraction"), "{err}");

    let (code, _, _) = mg(&["generate", "--out", p(&f.path("missing/dir/x.ndjson"))]);
    assert_eq!(code, 2);
}

#[test]
fn seed_flag_changes_output() {
    let f = Fixture::new();
    let (a, b) = (f.path("a.ndjson"), f.path("b.ndjson"));
    mg(&["generate", "--n-sellers", "20", "--out", p(&a)]);
    mg(&["--seed", "7", "generate", "--n-sellers", "20", "--out", p(&b)]);
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn train_reports_kkt_and_rejects_degenerate_labels() {
    let f = Fixture::new();
    let data = f.path("d.ndjson");
    mg(&["generate", "--n-sellers", "60", "--out", p(&data)]);
    let (code, out, err) = mg(&["--output", "machine", "train", "--data", p(&data), "--model", p(&f.path("m.json"))]);
    assert_eq!(code, 0, "{err}");
    let v: serde_json::Value = serde_json::from_str(out.trim()).unwrap();
    assert!(v["kkt_violation"].as_f64().unwrap() <= v["kkt_tol"].as_f64().unwrap());

    let normal = f.path("normal.ndjson");
    mg(&["generate", "--n-sellers", "30", "--fraud-fraction", "0", "--out", p(&normal)]);
    let (code, _, err) = mg(&["train", "--data", p(&normal), "--model", p(&f.path("m2.json"))]);
    assert_eq!(code, 3);
    assert!(err.contains("degenerate labels"), "{err}");

    let (code, _, _) = mg(&["train", "--data", p(&f.path("nope.ndjson")), "--model", p(&f.path("m3.json"))]);
    assert_eq!(code, 2);
}

#[test]
fn expert_labels_supersede_file_labels() {
    let f = Fixture::new();
    let data = f.path("d.ndjson");
    mg(&["generate", "--n-sellers", "40", "--out", p(&data)]);
    let sellers = load_labeled(&data).unwrap();
    let target = sellers.iter().find(|s| s.history.order_count() > 0).unwrap();
    let experts = f.path("experts.ndjson");
    let verdict = match target.label {
        marketguard::svm::Label::Fraudulent => ExpertVerdict::Normal,
        marketguard::svm::Label::Normal => ExpertVerdict::Fraudulent,
    };
    ExpertStore::new(vec![ExpertInput {
        seller_id: target.history.seller_id().to_string(),
        verdict,
        note: "manual review".into(),
        expert_id: "E1".into(),
        recorded_at: 1,
    }])
    .save(&experts)
    .unwrap();
    let (code, out, err) = mg(&[
        "--output", "machine", "train", "--data", p(&data), "--model", p(&f.path("m.json")), "--experts", p(&experts),
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("\"expert_overrides\":1"), "{out}");
}

#[test]
fn detect_emits_one_verdict_per_seller() {
    let f = Fixture::trained("120");
    let verdicts = f.path("v.ndjson");
    let (code, out, err) = mg(&[
        "--output", "machine", "detect", "--data", p(&f.path("test.ndjson")), "--model", p(&f.path("model.json")),
        "--verdicts", p(&verdicts),
    ]);
    assert_eq!(code, 0, "{err}");
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 36 + 1);
    assert!(lines.last().unwrap().starts_with("{\"kind\":\"detect_summary\""));
    let written: Vec<FraudVerdict> = ndjson::read_all(&verdicts).unwrap();
    assert_eq!(written.len(), 36);
    for (line, v) in lines.iter().zip(&written) {
        assert_eq!(*line, ndjson::to_line(v));
    }
}

#[test]
fn cold_start_only_file_is_all_insufficient_history() {
    let f = Fixture::trained("80");
    let cold: Vec<_> = load_labeled(&f.path("train.ndjson"))
        .unwrap()
        .into_iter()
        .filter(|s| s.history.order_count() == 0)
        .collect();
    assert!(!cold.is_empty());
    let path = f.path("cold.ndjson");
    save_labeled(&path, &cold).unwrap();
    let v = f.path("v.ndjson");
    let (code, _, _) = mg(&["detect", "--data", p(&path), "--model", p(&f.path("model.json")), "--verdicts", p(&v)]);
    assert_eq!(code, 0);
    let verdicts: Vec<FraudVerdict> = ndjson::read_all(&v).unwrap();
    assert!(verdicts.iter().all(|v| v.verdict == Verdict::InsufficientHistory));
}

#[test]
fn manifest_mismatch_exits_4() {
    let f = Fixture::trained("60");
    let mut doc = ModelDocument::load(&f.path("model.json")).unwrap();
    doc.feature_manifest.swap(0, 1);
    let other = f.path("other.json");
    doc.save(&other).unwrap();
    let (code, _, err) = mg(&["detect", "--data", p(&f.path("test.ndjson")), "--model", p(&other)]);
    assert_eq!(code, 4, "{err}");
    assert!(err.contains("manifest"), "{err}");
}

#[test]
fn evaluate_requires_labels() {
    let f = Fixture::trained("100");
    let (code, out, err) = mg(&[
        "--output", "machine", "evaluate", "--data", p(&f.path("test.ndjson")), "--model", p(&f.path("model.json")),
    ]);
    assert_eq!(code, 0, "{err}");
    let m: serde_json::Value = serde_json::from_str(out.trim()).unwrap();
    assert_eq!(m["kind"], "evaluation");
    assert!(m["recall"].as_f64().is_some());

    let histories = marketguard::data::load_histories(&f.path("test.ndjson")).unwrap();
    let unlabeled = f.path("unlabeled.ndjson");
    marketguard::data::save_histories(&unlabeled, &histories).unwrap();
    let (code, _, _) = mg(&["evaluate", "--data", p(&unlabeled), "--model", p(&f.path("model.json"))]);
    assert_eq!(code, 2);
}

fn verdict(id: &str, v: Verdict, confidence: f64) -> FraudVerdict {
    FraudVerdict {
        seller_id: id.into(),
        verdict: v,
        confidence,
        basis: marketguard::detection::VerdictBasis::Score,
        contributing: vec![],
    }
}

#[test]
fn act_is_idempotent_per_batch() {
    let f = Fixture::new();
    let (vp, ledger) = (f.path("v.ndjson"), f.path("ledger.ndjson"));
    ndjson::write_all(&vp, &[verdict("A", Verdict::Normal, 0.8), verdict("B", Verdict::Normal, 0.9)]).unwrap();
    let (code, _, _) = mg(&["act", "--verdicts", p(&vp), "--ledger", p(&ledger), "--as-of", "1000"]);
    assert_eq!(code, 0);
    assert!(load_ledger(&ledger).unwrap().is_empty());

    ndjson::write_all(&vp, &[verdict("A", Verdict::Fraudulent, 0.95), verdict("B", Verdict::Normal, 0.9)]).unwrap();
    mg(&["act", "--verdicts", p(&vp), "--ledger", p(&ledger), "--as-of", "1000"]);
    let entries = load_ledger(&ledger).unwrap();
    assert_eq!(entries.len(), 1);
    assert_eq!(entries[0].decision.action, Action::Ban);

    let before = std::fs::read(&ledger).unwrap();
    let (code, out, _) = mg(&["--output", "machine", "act", "--verdicts", p(&vp), "--ledger", p(&ledger), "--as-of", "2000"]);
    assert_eq!(code, 0);
    assert!(out.contains("\"appended\":0"), "{out}");
    assert_eq!(std::fs::read(&ledger).unwrap(), before);
}

#[test]
fn act_reports_grace_deadlines() {
    let f = Fixture::new();
    let (vp, ledger) = (f.path("v.ndjson"), f.path("ledger.ndjson"));
    ndjson::write_all(&vp, &[verdict("A", Verdict::Fraudulent, 0.75)]).unwrap();
    let (_, out, _) = mg(&["act", "--verdicts", p(&vp), "--ledger", p(&ledger), "--as-of", "0"]);
    assert!(out.contains("grace A") && out.contains("deadline 1209600 pending"), "{out}");

    // A later batch reports the same suspension as expired.
    ndjson::write_all(&vp, &[verdict("B", Verdict::Normal, 0.75)]).unwrap();
    let (_, out, _) = mg(&["act", "--verdicts", p(&vp), "--ledger", p(&ledger), "--as-of", "2000000"]);
    assert!(out.contains("EXPIRED"), "{out}");
}

#[test]
fn act_rejects_unreadable_ledger() {
    let f = Fixture::new();
    let vp = f.path("v.ndjson");
    ndjson::write_all(&vp, &[verdict("A", Verdict::Fraudulent, 0.95)]).unwrap();
    let ledger = f.path("ledger.ndjson");
    std::fs::write(&ledger, "not json\n").unwrap();
    let (code, _, _) = mg(&["act", "--verdicts", p(&vp), "--ledger", p(&ledger), "--as-of", "0"]);
    assert_eq!(code, 2);
}

#[test]
fn config_file_supplies_paths_and_rejects_typos() {
    let f = Fixture::new();
    let cfg = f.path("run.toml");
    std::fs::write(
        &cfg,
        format!(
            "[paths]\ndataset = {:?}\n\n[generator]\nn_sellers = 25\nfraud_fraction = 0.4\n",
            p(&f.path("d.ndjson"))
        ),
    )
    .unwrap();
    let (code, out, err) = mg(&["--config", p(&cfg), "--output", "machine", "generate"]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("\"sellers\":25,\"fraudulent\":10"), "{out}");

    std::fs::write(&cfg, "[generator]\nn_seller = 25\n").unwrap();
    let (code, _, err) = mg(&["--config", p(&cfg), "generate", "--out", p(&f.path("x"))]);
    assert_eq!(code, 2);
    assert!(err.contains("n_seller"), "{err}");
}

#[test]
fn rules_check_reports_every_problem() {
    let f = Fixture::new();
    let rules = f.path("rules.toml");
    std::fs::write(&rules, marketguard::rules::DEFAULT_RULES).unwrap();
    let (code, _, _) = mg(&["rules-check", "--rules", p(&rules)]);
    assert_eq!(code, 0);
    std::fs::write(
        &rules,
        "format = \"marketguard-rules/1\"\ndecision_threshold = 1.0\n\n[[rule]]\nid = \"a\"\nfeature = \"nope\"\ncomparator = \"~\"\nvalue = 1.0\nweight = 1.0\n",
    )
    .unwrap();
    let (code, _, err) = mg(&["rules-check", "--rules", p(&rules)]);
    assert_eq!(code, 2);
    assert!(err.contains("nope") && err.contains("unsupported comparator"), "{err}");
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_marketguard");
    let f = Fixture::new();
    let status = Command::new(bin)
        .args(["generate", "--n-sellers", "10", "--out", p(&f.path("d.ndjson"))])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let status = Command::new(bin).args(["bogus-command"]).output().unwrap();
    assert_eq!(status.status.code(), Some(2));
    let out = Command::new(bin).arg("--help").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("rules-check"));
}

fn docs(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs").join(name)
}

#[test]
fn documented_examples_parse() {
    let cfg = marketguard::cli::RunConfig::load(&docs("config.example.toml")).unwrap();
    assert_eq!(cfg.generator, marketguard::data::GeneratorConfig::default());
    assert_eq!(cfg.fusion, marketguard::detection::FusionPolicy::default());
    assert_eq!(cfg.policy, marketguard::management::PolicyConfig::default());
    assert_eq!(cfg.train.train_config(), marketguard::svm::TrainConfig::default());
    assert_eq!(cfg.train.kernel, Some(marketguard::pipeline::default_kernel()));

    let sellers = load_labeled(&docs("example.dataset.ndjson")).unwrap();
    assert_eq!(sellers.len(), 2);
    let f = marketguard::features::extract(&sellers[0].history);
    assert_eq!(f.return_ratio, 0.5);
    assert_eq!(f.sla_adherence, 0.5);
    assert!(!marketguard::features::extract(&sellers[1].history).has_history);
}

#[test]
fn documented_store_lines_parse() {
    let f = Fixture::new();
    let rep = f.path("rep.ndjson");
    std::fs::write(&rep, "{\"kind\":\"reputation\",\"seller_id\":\"OLD7\",\"display_name\":\"Acme Traders\",\"tax_id\":\"TX-1\",\"bank_account_hash\":\"ab12\",\"address\":\"1 Main St\",\"email_domain\":\"acme.example\",\"enrolled_at\":0,\"status\":\"banned\",\"source\":\"internal\",\"recorded_at\":1690000000}\n").unwrap();
    assert_eq!(marketguard::detection::ReputationDb::load(&rep).unwrap().records().len(), 1);
    let ex = f.path("experts.ndjson");
    std::fs::write(&ex, "{\"kind\":\"expert\",\"seller_id\":\"S00012\",\"verdict\":\"fraudulent\",\"note\":\"confirmed counterfeit\",\"expert_id\":\"E3\",\"recorded_at\":1700000100}\n").unwrap();
    assert_eq!(ExpertStore::load(&ex).unwrap().inputs()[0].verdict, ExpertVerdict::Fraudulent);
}

#[test]
fn reputation_hit_through_cli() {
    let f = Fixture::trained("60");
    let sellers = load_labeled(&f.path("test.ndjson")).unwrap();
    let target = sellers.iter().find(|s| s.label == marketguard::svm::Label::Normal && s.history.order_count() > 0).unwrap();
    let mut banned = target.history.profile.clone();
    banned.seller_id = "EARLIER".into();
    banned.display_name = "Something Else".into();
    banned.address = "elsewhere".into();
    banned.email_domain = "other.example".into();
    let rep = f.path("rep.ndjson");
    marketguard::detection::ReputationDb::new(vec![marketguard::detection::ReputationRecord {
        attributes: banned,
        status: marketguard::detection::ReputationStatus::Banned,
        source: marketguard::detection::ReputationSource::Internal,
        recorded_at: 0,
    }])
    .save(&rep)
    .unwrap();
    let v = f.path("v.ndjson");
    let (code, _, err) = mg(&[
        "detect", "--data", p(&f.path("test.ndjson")), "--model", p(&f.path("model.json")), "--reputation", p(&rep),
        "--verdicts", p(&v),
    ]);
    assert_eq!(code, 0, "{err}");
    let verdicts: Vec<FraudVerdict> = ndjson::read_all(&v).unwrap();
    let hit = verdicts.iter().find(|v| v.seller_id == target.history.seller_id()).unwrap();
    assert_eq!((hit.verdict, hit.confidence), (Verdict::Fraudulent, 0.95));
}
