//! Trains a small waveform model on planted-tone recordings and shows the
//! per-epoch validation AUROC and the selected checkpoint.

use edbench::eval::auroc;
use edbench::labels::Ternary;
use edbench::models::nn::{DeepNet, Modality, NetworkShape};
use edbench::models::train::predict;
use edbench::models::{train_deep, DeepData, DeepModelConfig};
use edbench::synthgen::{generate_waveform, BaseRhythm, PlantedComponent};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn make(n: usize, seed: u64) -> (DeepData, Vec<Vec<Ternary>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut waves = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let positive = rng.random_bool(0.4);
        let planted: Vec<PlantedComponent> = positive
            .then_some(PlantedComponent {
                frequency: 3.0,
                amplitude: 0.4,
            })
            .into_iter()
            .collect();
        let base = BaseRhythm::new(rng.random_range(55.0..110.0));
        waves.push(generate_waveform(&base, &planted, 0.2, 25.0, seed * 10_000 + i as u64));
        labels.push(vec![Ternary::from_bool(positive)]);
    }
    let data = DeepData {
        waveforms: Some(waves),
        numeric: None,
        categorical: vec![[0; 3]; n],
    };
    (data, labels)
}

fn main() -> edbench::Result<()> {
    let (train, ytr) = make(240, 1);
    let (val, yva) = make(80, 2);
    let (test, yte) = make(120, 3);

    let cfg = DeepModelConfig {
        d_model: 16,
        n_blocks: 1,
        epochs: 6,
        batch_size: 32,
        ..DeepModelConfig::desk()
    };
    let net = DeepNet::new(NetworkShape {
        modality: Modality::Waveform,
        leads: 12,
        d_model: cfg.d_model,
        d_state: cfg.d_state,
        n_blocks: cfg.n_blocks,
        numeric_dim: 0,
        cardinalities: [3, 6, 6],
        embed_dim: cfg.embed_dim,
        mlp_layers: cfg.mlp_layers,
        n_labels: 1,
    });
    let out = train_deep(&net, net.init(cfg.seed), &cfg, (&train, &ytr), (&val, &yva))?;
    for e in &out.history {
        let loss = e.train_loss.map_or("-".to_string(), |l| format!("{l:.4}"));
        println!("epoch {:>2}  loss {loss:>7}  val AUROC {:.4}", e.epoch, e.val_macro_auroc);
    }
    let probs = predict(&net, &out.params, &test)?;
    let scores: Vec<f64> = probs.iter().map(|p| p[0]).collect();
    let labels: Vec<Ternary> = yte.iter().map(|y| y[0]).collect();
    println!("kept epoch {}, test AUROC {:.4}", out.best_epoch, auroc(&scores, &labels)?);
    Ok(())
}
