use eager::classifiers::{
    gradient_check, train_classifier, train_mlp, train_rf, Adam, ClassifierKind, Mlp, MlpConfig, RandomForestConfig,
    TrainedModel,
};
use eager::dataset::FeatureMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn blobs(n: usize, dim: usize, seed: u64) -> FeatureMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for i in 0..n {
        let label = i % 2 == 0;
        let centre = if label { 0.7 } else { 0.3 };
        values.extend((0..dim).map(|_| centre + rng.gen_range(-0.25..0.25)));
        labels.push(label);
    }
    FeatureMatrix::new(None, dim, values, labels).unwrap()
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

#[test]
fn adam_matches_scalar_recurrence() {
    let (lr, b1, b2, eps) = (0.05, 0.8, 0.99, 1e-6);
    let mut adam = Adam::new(1, lr, b1, b2, eps);
    let mut p = [0.3];
    let (mut x, mut m, mut v) = (0.3f64, 0.0f64, 0.0f64);
    for t in 1..=50 {
        let g = (t as f64 * 0.37).sin();
        adam.step(&mut p, &[g]);
        m = b1 * m + (1.0 - b1) * g;
        v = b2 * v + (1.0 - b2) * g * g;
        x -= lr * (m / (1.0 - b1.powi(t))) / ((v / (1.0 - b2.powi(t))).sqrt() + eps);
        assert!((p[0] - x).abs() <= 1e-12, "step {t}: {} vs {x}", p[0]);
    }
}

#[test]
fn adam_first_step_moves_by_learning_rate() {
    let mut adam = Adam::new(3, 0.01, 0.9, 0.999, 1e-8);
    let mut p = [1.0, 1.0, 1.0];
    adam.step(&mut p, &[4.0, -0.5, 0.0]);
    assert!((p[0] - 0.99).abs() < 1e-9);
    assert!((p[1] - 1.01).abs() < 1e-9);
    assert_eq!(p[2], 1.0);
}

#[test]
fn logistic_gradient_closed_form() {
    let mut net = Mlp::zeros(2, &[]);
    net.params = vec![0.4, -1.2, 0.3];
    let rows = [([1.0, 2.0], true), ([-0.5, 0.25], false)];
    let (loss, grad) = net.loss_and_grad(rows.iter().map(|(r, l)| (r.as_slice(), *l)));
    let mut want = [0.0; 3];
    let mut want_loss = 0.0;
    for (x, y) in rows {
        let p = sigmoid(0.4 * x[0] - 1.2 * x[1] + 0.3);
        let y = if y { 1.0 } else { 0.0 };
        want_loss -= y * p.ln() + (1.0 - y) * (1.0 - p).ln();
        want[0] += (p - y) * x[0];
        want[1] += (p - y) * x[1];
        want[2] += p - y;
    }
    assert!((loss - want_loss).abs() < 1e-12);
    for (g, w) in grad.iter().zip(want) {
        assert!((g - w).abs() < 1e-12);
    }
}

#[test]
fn backprop_agrees_with_finite_differences() {
    let probe = blobs(10, 5, 3);
    for (seed, hidden) in [(1, vec![7]), (2, vec![6, 4]), (3, vec![200, 20])] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = Mlp::he_init(5, &hidden, &mut rng);
        let err = gradient_check(&net, &probe);
        assert!(err < 1e-4, "{hidden:?}: {err}");
    }
}

#[test]
fn duplicated_rows_double_the_gradient() {
    let data = blobs(6, 3, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let net = Mlp::he_init(3, &[5], &mut rng);
    let rows = || data.rows().zip(data.labels().iter().copied());
    let (l1, g1) = net.loss_and_grad(rows());
    let (l2, g2) = net.loss_and_grad(rows().chain(rows()));
    assert!((l2 - 2.0 * l1).abs() < 1e-12);
    for (a, b) in g1.iter().zip(&g2) {
        assert!((2.0 * a - b).abs() < 1e-12);
    }
}

#[test]
fn mlp_learns_blobs() {
    let train = blobs(200, 4, 5);
    let valid = blobs(40, 4, 6);
    let cfg = MlpConfig {
        hidden_sizes: vec![16, 8],
        learning_rate: 1e-2,
        max_epochs: 60,
        seed: 3,
        ..Default::default()
    };
    let model = TrainedModel::Mlp(train_mlp(&train, &valid, &cfg).unwrap());
    let test = blobs(100, 4, 7);
    let p = model.predict(&test).unwrap();
    let correct = p.labels.iter().zip(test.labels()).filter(|(a, b)| a == b).count();
    assert!(correct >= 95, "{correct}/100");
}

#[test]
fn mlp_is_bit_reproducible() {
    let train = blobs(80, 3, 8);
    let cfg = MlpConfig {
        hidden_sizes: vec![10, 4],
        learning_rate: 1e-3,
        max_epochs: 15,
        seed: 12,
        ..Default::default()
    };
    let empty = FeatureMatrix::empty(None, 3);
    let a = train_mlp(&train, &empty, &cfg).unwrap();
    let b = train_mlp(&train, &empty, &cfg).unwrap();
    assert_eq!(a, b);
    let c = train_mlp(&train, &empty, &MlpConfig { seed: 13, ..cfg }).unwrap();
    assert_ne!(a.network.params, c.network.params);
}

#[test]
fn forest_reaches_full_training_accuracy() {
    let data = blobs(200, 6, 10);
    let forest = train_rf(&data, &RandomForestConfig { n_trees: 60, seed: 2, ..Default::default() }).unwrap();
    for (row, &label) in data.rows().zip(data.labels()) {
        assert_eq!(forest.score(row) >= 0.5, label);
    }
}

#[test]
fn forest_invariant_under_increasing_affine_map() {
    let data = blobs(120, 3, 11);
    let scaled = FeatureMatrix::new(
        None,
        3,
        data.values().iter().map(|v| 4.0 * v + 1.0).collect(),
        data.labels().to_vec(),
    )
    .unwrap();
    let cfg = RandomForestConfig { n_trees: 25, seed: 6, ..Default::default() };
    let a = train_rf(&data, &cfg).unwrap();
    let b = train_rf(&scaled, &cfg).unwrap();
    for (r1, r2) in data.rows().zip(scaled.rows()) {
        assert_eq!(a.score(r1), b.score(r2));
    }
}

#[test]
fn forest_is_deterministic_and_seed_sensitive() {
    let data = blobs(100, 4, 12);
    let cfg = RandomForestConfig { n_trees: 20, seed: 1, ..Default::default() };
    assert_eq!(train_rf(&data, &cfg).unwrap(), train_rf(&data, &cfg).unwrap());
    assert_ne!(train_rf(&data, &cfg).unwrap(), train_rf(&data, &RandomForestConfig { seed: 2, ..cfg }).unwrap());
}

#[test]
fn model_file_round_trip_keeps_scores() {
    let data = blobs(60, 3, 13);
    let empty = FeatureMatrix::empty(None, 3);
    let dir = tempfile::tempdir().unwrap();
    for kind in [ClassifierKind::Rf, ClassifierKind::Mlp] {
        let rf = RandomForestConfig { n_trees: 10, ..Default::default() };
        let mlp = MlpConfig { hidden_sizes: vec![4], max_epochs: 3, ..Default::default() };
        let model = train_classifier(kind, &data, &empty, &rf, &mlp).unwrap();
        let path = dir.path().join("model.json");
        model.save(&path).unwrap();
        let back = TrainedModel::load(&path).unwrap();
        let s1 = model.predict(&data).unwrap().scores;
        let s2 = back.predict(&data).unwrap().scores;
        assert!(s1.iter().zip(&s2).all(|(a, b)| a.to_bits() == b.to_bits()));
        assert_eq!(back.kind(), kind);
        assert!(back.score(&[0.1, 0.2]).is_err());
    }
}

#[test]
fn rejects_unusable_training_sets() {
    let one_class = FeatureMatrix::new(None, 1, vec![0.1, 0.2, 0.3], vec![true; 3]).unwrap();
    let empty = FeatureMatrix::empty(None, 1);
    assert!(train_rf(&one_class, &RandomForestConfig::default()).is_err());
    assert!(train_mlp(&one_class, &empty, &MlpConfig::default()).is_err());
    let nan = FeatureMatrix::new(None, 1, vec![0.1, f64::NAN], vec![true, false]).unwrap();
    assert!(train_rf(&nan, &RandomForestConfig::default()).is_err());
}
