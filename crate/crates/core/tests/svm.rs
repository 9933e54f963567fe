use marketguard::svm::{qp_oracle, train_smo, Kernel, Label, Sample, SvmModel, TrainConfig};
use marketguard::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn s(v: &[f64]) -> Sample {
    Sample(v.to_vec())
}

fn two_point() -> (Vec<Sample>, Vec<Label>) {
    (
        vec![s(&[-1.0, 0.0]), s(&[1.0, 0.0])],
        vec![Label::Normal, Label::Fraudulent],
    )
}

fn two_point_model() -> SvmModel {
    let (x, y) = two_point();
    train_smo(&x, &y, Kernel::Linear, &TrainConfig::with_c(1e6)).unwrap()
}

fn xor() -> (Vec<Sample>, Vec<Label>) {
    (
        vec![s(&[0.0, 0.0]), s(&[1.0, 1.0]), s(&[0.0, 1.0]), s(&[1.0, 0.0])],
        vec![Label::Fraudulent, Label::Fraudulent, Label::Normal, Label::Normal],
    )
}

fn random_problem(rng: &mut ChaCha8Rng) -> (Vec<Sample>, Vec<Label>) {
    let m = rng.random_range(2..=8);
    let d = rng.random_range(1..=3);
    let x: Vec<Sample> = (0..m)
        .map(|_| Sample((0..d).map(|_| rng.random_range(-1.0..1.0)).collect()))
        .collect();
    let mut y: Vec<Label> = (0..m)
        .map(|_| if rng.random_bool(0.5) { Label::Fraudulent } else { Label::Normal })
        .collect();
    y[0] = Label::Normal;
    y[1] = Label::Fraudulent;
    (x, y)
}

#[test]
fn two_point_recovers_analytic_hyperplane() {
    let model = two_point_model();
    let w = model.primal_weights().unwrap();
    assert!((w[0] - 1.0).abs() < 1e-4 && w[1].abs() < 1e-4, "{w:?}");
    assert!(model.bias.abs() < 1e-4);
    assert!((model.margin(1e-8).unwrap() - 1.0).abs() < 1e-4);
    for (x, want) in [([2.0, 0.0], 2.0), ([0.0, 0.0], 0.0), ([-1.0, 0.0], -1.0), ([1.0, 0.0], 1.0)] {
        let f = model.decision_value(&s(&x)).unwrap();
        assert!((f - want).abs() < 1e-4, "f({x:?}) = {f}");
    }
}

#[test]
fn decision_value_matches_primal_form_for_linear_kernel() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (x, y) = random_problem(&mut rng);
    let model = train_smo(&x, &y, Kernel::Linear, &TrainConfig::with_c(10.0)).unwrap();
    let w = model.primal_weights().unwrap();
    for _ in 0..20 {
        let p: Vec<f64> = (0..w.len()).map(|_| rng.random_range(-2.0..2.0)).collect();
        let primal: f64 = w.iter().zip(&p).map(|(a, b)| a * b).sum::<f64>() + model.bias;
        assert!((model.decision_value(&Sample(p)).unwrap() - primal).abs() < 1e-9);
    }
}

#[test]
fn classify_breaks_ties_toward_fraudulent() {
    let model = two_point_model();
    let mut on_plane = model.clone();
    on_plane.bias = 0.0;
    on_plane.alphas = vec![0.5, 0.5];
    assert_eq!(on_plane.decision_value(&s(&[0.0, 0.0])).unwrap(), 0.0);
    assert_eq!(on_plane.classify(&s(&[0.0, 0.0])).unwrap(), Label::Fraudulent);
    assert_eq!(model.classify(&s(&[2.0, 0.0])).unwrap(), Label::Fraudulent);
    assert_eq!(model.classify(&s(&[-1.0, 0.0])).unwrap(), Label::Normal);
}

#[test]
fn margin_matches_primal_norm_and_rejects_degenerate() {
    let model = two_point_model();
    let w = model.primal_weights().unwrap();
    let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!((model.margin(1e-8).unwrap() - 1.0 / norm).abs() < 1e-12);

    let mut zero = model.clone();
    zero.alphas = vec![0.0, 0.0];
    assert!(matches!(zero.margin(1e-8), Err(Error::DegenerateModel(_))));
}

#[test]
fn mirrored_data_weights() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let x: Vec<Sample> = (0..10)
        .map(|i| {
            let shift = if i % 2 == 0 { 1.5 } else { -1.5 };
            s(&[shift + rng.random_range(-0.5..0.5), rng.random_range(-1.0..1.0)])
        })
        .collect();
    let y: Vec<Label> = (0..10)
        .map(|i| if i % 2 == 0 { Label::Fraudulent } else { Label::Normal })
        .collect();
    let cfg = TrainConfig::with_c(1e3);
    let base = train_smo(&x, &y, Kernel::Linear, &cfg).unwrap();
    let w = base.primal_weights().unwrap();

    let neg_x: Vec<Sample> = x.iter().map(|v| Sample(v.0.iter().map(|f| -f).collect())).collect();
    let swapped: Vec<Label> = y.iter().map(|l| l.flip()).collect();

    // Negating features alone negates w and keeps b.
    let m1 = train_smo(&neg_x, &y, Kernel::Linear, &cfg).unwrap();
    for (a, b) in m1.primal_weights().unwrap().iter().zip(&w) {
        assert!((a + b).abs() < 1e-3, "{a} vs {b}");
    }
    assert!((m1.bias - base.bias).abs() < 1e-3);

    // Negating features and swapping labels keeps w and negates b.
    let m2 = train_smo(&neg_x, &swapped, Kernel::Linear, &cfg).unwrap();
    for (a, b) in m2.primal_weights().unwrap().iter().zip(&w) {
        assert!((a - b).abs() < 1e-3, "{a} vs {b}");
    }
    assert!((m2.bias + base.bias).abs() < 1e-3);
}

#[test]
fn primal_weights_need_linear_kernel() {
    let (x, y) = xor();
    let model = train_smo(&x, &y, Kernel::Rbf { gamma: 1.0 }, &TrainConfig::with_c(10.0)).unwrap();
    assert!(matches!(model.primal_weights(), Err(Error::Unsupported(_))));
}

#[test]
fn xor_is_separated_by_rbf() {
    let (x, y) = xor();
    let model = train_smo(&x, &y, Kernel::Rbf { gamma: 1.0 }, &TrainConfig::with_c(10.0)).unwrap();
    for (xi, yi) in x.iter().zip(&y) {
        assert_eq!(model.classify(xi).unwrap(), *yi);
    }
    let oracle = qp_oracle(&x, &y, Kernel::Rbf { gamma: 1.0 }, 10.0).unwrap();
    let reference = oracle.to_model(Kernel::Rbf { gamma: 1.0 }, &x, &y);
    for xi in &x {
        let a = model.decision_value(xi).unwrap();
        let b = reference.decision_value(xi).unwrap();
        assert!((a - b).abs() < 1e-2, "{a} vs {b}");
    }
}

#[test]
fn training_errors() {
    let (x, _) = two_point();
    let err = train_smo(&x, &[Label::Fraudulent; 2], Kernel::Linear, &TrainConfig::default()).unwrap_err();
    assert!(matches!(err, Error::DegenerateLabels));
    assert_eq!(err.to_string(), "degenerate labels: training data must contain both classes");

    let bad = vec![s(&[0.0]), s(&[1.0, 2.0])];
    let err = train_smo(&bad, &[Label::Normal, Label::Fraudulent], Kernel::Linear, &TrainConfig::default())
        .unwrap_err();
    assert!(matches!(err, Error::InvalidInput(_)));

    let err = train_smo(&x[..1], &[Label::Normal], Kernel::Linear, &TrainConfig::default()).unwrap_err();
    assert!(matches!(err, Error::InvalidInput(_)));
}

#[test]
fn exhausted_budget_reports_convergence_error() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x: Vec<Sample> = (0..60).map(|_| s(&[rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])).collect();
    let y: Vec<Label> = (0..60)
        .map(|i| if i % 2 == 0 { Label::Normal } else { Label::Fraudulent })
        .collect();
    let cfg = TrainConfig {
        c: 1e4,
        max_passes: 1,
        ..TrainConfig::default()
    };
    match train_smo(&x, &y, Kernel::Rbf { gamma: 5.0 }, &cfg) {
        Err(Error::Convergence { passes, kkt_violation, .. }) => {
            assert_eq!(passes, 1);
            assert!(kkt_violation > cfg.kkt_tol);
        }
        other => panic!("expected convergence error, got {other:?}"),
    }
}

#[test]
fn kkt_violation_diagnostics() {
    let (x, y) = two_point();
    let cfg = TrainConfig::with_c(1e6);
    let model = train_smo(&x, &y, Kernel::Linear, &cfg).unwrap();
    assert!(model.kkt_violation(&x, &y, &cfg).unwrap() <= cfg.kkt_tol);
    assert_eq!(model.kkt_violation(&[], &[], &cfg).unwrap(), 0.0);

    let mut shifted = model.clone();
    shifted.bias += 1.0;
    assert!(shifted.kkt_violation(&x, &y, &cfg).unwrap() >= 1.0 - cfg.kkt_tol);

    assert!(matches!(
        model.kkt_violation(&[s(&[1.0])], &[Label::Normal], &cfg),
        Err(Error::InvalidInput(_))
    ));
}

#[test]
fn smo_agrees_with_oracle_on_random_problems() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let kernels = [
        Kernel::Linear,
        Kernel::Rbf { gamma: 1.0 },
        Kernel::Polynomial { degree: 2, offset: 1.0 },
    ];
    for case in 0..30 {
        let (x, y) = random_problem(&mut rng);
        let c = [1.0, 10.0, 1e4][case % 3];
        let kernel = kernels[(case / 3) % 3];
        let cfg = TrainConfig { c, rng_seed: case as u64, ..TrainConfig::default() };
        let model = train_smo(&x, &y, kernel, &cfg)
            .unwrap_or_else(|e| panic!("case {case} {kernel:?} c={c} {x:?} {y:?}: {e}"));
        let oracle = qp_oracle(&x, &y, kernel, c).unwrap();
        let reference = oracle.to_model(kernel, &x, &y);
        for _ in 0..20 {
            let p = Sample((0..x[0].dim()).map(|_| rng.random_range(-1.5..1.5)).collect());
            let a = model.decision_value(&p).unwrap();
            let b = reference.decision_value(&p).unwrap();
            assert!((a - b).abs() <= 1e-2, "case {case} ({kernel:?}, c={c}): {a} vs {b}");
        }
    }
}

fn dataset() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<bool>)> {
    (3usize..16, 1usize..4).prop_flat_map(|(m, d)| {
        (
            prop::collection::vec(prop::collection::vec(-1.0f64..1.0, d), m),
            prop::collection::vec(any::<bool>(), m),
        )
    })
}

fn labels_from(flags: &[bool]) -> Vec<Label> {
    let mut y: Vec<Label> = flags
        .iter()
        .map(|&f| if f { Label::Fraudulent } else { Label::Normal })
        .collect();
    y[0] = Label::Normal;
    y[1] = Label::Fraudulent;
    y
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn trained_models_are_dual_feasible((xs, flags) in dataset(), c in prop::sample::select(vec![0.1, 1.0, 100.0])) {
        let x: Vec<Sample> = xs.into_iter().map(Sample).collect();
        let y = labels_from(&flags);
        let cfg = TrainConfig::with_c(c);
        let model = train_smo(&x, &y, Kernel::Rbf { gamma: 1.0 }, &cfg).unwrap();
        prop_assert!(model.alphas.iter().all(|a| *a > 0.0 && *a <= c));
        prop_assert!(model.equality_residual().abs() <= cfg.kkt_tol);
        prop_assert!(model.kkt_violation(&x, &y, &cfg).unwrap() <= cfg.kkt_tol);
        prop_assert!(model.support_labels.contains(&Label::Normal));
        prop_assert!(model.support_labels.contains(&Label::Fraudulent));
    }

    #[test]
    fn permutation_and_determinism((xs, flags) in dataset(), seed in any::<u64>(), rot in 0usize..16) {
        let x: Vec<Sample> = xs.into_iter().map(Sample).collect();
        let y = labels_from(&flags);
        let cfg = TrainConfig { rng_seed: seed, ..TrainConfig::default() };
        let a = train_smo(&x, &y, Kernel::Linear, &cfg).unwrap();
        let again = train_smo(&x, &y, Kernel::Linear, &cfg).unwrap();
        prop_assert_eq!(&a, &again);

        let k = rot % x.len();
        let mut px = x.clone();
        let mut py = y.clone();
        px.rotate_left(k);
        py.rotate_left(k);
        px.reverse();
        py.reverse();
        let b = train_smo(&px, &py, Kernel::Linear, &cfg).unwrap();
        for probe in &x {
            let fa = a.decision_value(probe).unwrap();
            let fb = b.decision_value(probe).unwrap();
            prop_assert!((fa - fb).abs() <= 1e-6);
        }
    }
}
