use edbench::eval::auroc;
use edbench::labels::Ternary;
use edbench::models::nn::{DeepNet, Modality, NetworkShape};
use edbench::models::train::predict;
use edbench::models::{train_deep, DeepData, DeepModelConfig};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Tabular rows whose first label follows the first feature; the second
/// label is masked on every other row.
fn data(n: usize, seed: u64) -> (DeepData, Vec<Vec<Ternary>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = Array2::from_shape_fn((n, 4), |_| rng.random_range(-1.0..1.0));
    let labels = (0..n)
        .map(|i| {
            let y = x[[i, 0]] + 0.3 * rng.random_range(-1.0..1.0) > 0.0;
            let second = if i % 2 == 0 { Ternary::Masked } else { Ternary::from_bool(rng.random_bool(0.5)) };
            vec![Ternary::from_bool(y), second]
        })
        .collect();
    let categorical = (0..n).map(|i| [i % 3, 0, 1]).collect();
    let d = DeepData {
        waveforms: None,
        numeric: Some(x),
        categorical,
    };
    (d, labels)
}

fn setup() -> (DeepNet, DeepModelConfig) {
    let cfg = DeepModelConfig {
        d_model: 8,
        embed_dim: 2,
        batch_size: 16,
        epochs: 20,
        seed: 4,
        ..DeepModelConfig::desk()
    };
    let net = DeepNet::new(NetworkShape {
        modality: Modality::Tabular,
        leads: 12,
        d_model: cfg.d_model,
        d_state: cfg.d_state,
        n_blocks: cfg.n_blocks,
        numeric_dim: 4,
        cardinalities: [3, 6, 6],
        embed_dim: cfg.embed_dim,
        mlp_layers: cfg.mlp_layers,
        n_labels: 2,
    });
    (net, cfg)
}

#[test]
fn zero_epochs_keeps_the_initialisation() {
    let (net, mut cfg) = setup();
    cfg.epochs = 0;
    let (tr, ytr) = data(64, 1);
    let (va, yva) = data(32, 2);
    let init = net.init(cfg.seed);
    let out = train_deep(&net, init.clone(), &cfg, (&tr, &ytr), (&va, &yva)).unwrap();
    assert_eq!(out.params, init);
    assert_eq!(out.best_epoch, 0);
    assert_eq!(out.history.len(), 1);
    assert!(out.history[0].train_loss.is_none());
}

#[test]
fn training_is_deterministic_and_learns() {
    let (net, cfg) = setup();
    let (tr, ytr) = data(400, 1);
    let (va, yva) = data(100, 2);
    let (te, yte) = data(200, 3);
    let a = train_deep(&net, net.init(cfg.seed), &cfg, (&tr, &ytr), (&va, &yva)).unwrap();
    let b = train_deep(&net, net.init(cfg.seed), &cfg, (&tr, &ytr), (&va, &yva)).unwrap();
    assert_eq!(a.params, b.params);
    assert_eq!(a.history, b.history);
    assert!(a.best_epoch > 0, "no epoch beat the initialisation");

    let score = |params: &[f64]| {
        let p = predict(&net, params, &te).unwrap();
        let s: Vec<f64> = p.iter().map(|r| r[0]).collect();
        let y: Vec<Ternary> = yte.iter().map(|r| r[0]).collect();
        auroc(&s, &y).unwrap()
    };
    let trained = score(&a.params);
    assert!(trained > 0.85, "trained AUROC {trained}");
    assert!(trained > score(&net.init(cfg.seed)));
}

#[test]
fn losses_decrease_over_epochs() {
    let (net, cfg) = setup();
    let (tr, ytr) = data(400, 5);
    let (va, yva) = data(100, 6);
    let out = train_deep(&net, net.init(cfg.seed), &cfg, (&tr, &ytr), (&va, &yva)).unwrap();
    let losses: Vec<f64> = out.history.iter().filter_map(|e| e.train_loss).collect();
    assert_eq!(losses.len(), cfg.epochs);
    assert!(losses.last().unwrap() < losses.first().unwrap(), "{losses:?}");
}
